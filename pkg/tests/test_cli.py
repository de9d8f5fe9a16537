import json
import os

import numpy as np
import pytest

import _oracles as O
from decolab.cli import main
from decolab.io import parse_config, read_csv
from decolab.model import SystemParams
from decolab.spectral import coherence_envelope

POST = ["--beta", "6", "--a-delta", "0.02", "--dq", "1.3", "--no-timestamp"]
PRE = ["--beta", "6", "--a-delta", "0.002", "--dq", "1.3", "--no-timestamp"]


def _table(text):
    out = {}
    for line in text.strip().splitlines():
        k, v = line.split(None, 1)
        out[k] = v.strip()
    return out


def _run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_rates(capsys):
    code, out, _ = _run(capsys, "rates", *POST)
    assert code == 0
    t = _table(out)
    assert float(t["z"]) == pytest.approx(O.Z_POST, rel=1e-9)
    assert complex(t["lambda_minus"]).real == pytest.approx(O.LAMBDA_MINUS_POST, rel=1e-9)
    assert float(t["t2m_over_t1"]) == pytest.approx(O.RATIO_POST, rel=1e-9)
    assert t["regime"] == "biexponential"


def test_missing_required_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["rates", "--a-delta", "0.02"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ValidationError"


def test_invalid_value_exit_code(capsys):
    code, _, err = _run(capsys, "rates", "--beta", "-1", "--a-delta", "0.02")
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ValidationError"


def test_delta_scaling(capsys):
    _, one, _ = _run(capsys, "rates", *POST)
    _, two, _ = _run(capsys, "rates", *POST, "--delta", "2")
    a, b = _table(one), _table(two)
    for k in ("gamma1", "y", "z", "a_thr"):
        assert float(b[k]) == pytest.approx(2 * float(a[k]), rel=1e-9)
    assert a["regime"] == b["regime"]


def test_threshold(capsys):
    code, out, _ = _run(capsys, "threshold", "--beta", "6")
    assert code == 0
    assert float(out.split()[-1]) == pytest.approx(O.A_THR_BETA6, rel=1e-9)


def test_critical_angle(capsys):
    code, out, _ = _run(capsys, "critical-angle", *POST)
    assert code == 0
    assert float(_table(out)["phi_c"]) == pytest.approx(O.PHI_FAST_FREE, abs=1e-9)


def test_critical_angle_pre_threshold(capsys):
    code, _, err = _run(capsys, "critical-angle", *PRE)
    assert code == 4
    assert json.loads(err.strip().splitlines()[-1])["error"] == "NotBifurcatedError"


def test_spectrum_first_row_is_static(tmp_path, capsys):
    path = tmp_path / "s.csv"
    assert main(["spectrum", *POST, "-o", str(path)]) == 0
    _, meta, cols = read_csv(path)
    assert cols["nu"][0] == 0
    assert cols["re_chi"][0] == pytest.approx(O.CHI_DD_ZERO_BETA6, rel=1e-12)
    assert len(cols["nu"]) == 1001
    fdt = tmp_path / "f.csv"
    assert main(["spectrum", *POST, "--method", "fdt", "-o", str(fdt)]) == 0
    _, _, cols2 = read_csv(fdt)
    assert np.allclose(cols2["im_chi"], cols["im_chi"], atol=1e-12)


def test_evolve_ntme_gibbs(tmp_path):
    path = tmp_path / "e.csv"
    assert main(["evolve", *POST, "--engine", "ntme", "--rho0", "gibbs", "--n-t", "11",
                 "-o", str(path)]) == 0
    _, _, cols = read_csv(path)
    assert np.allclose(cols["rho11"], O.GIBBS_BETA6[0], atol=1e-11)
    assert np.max(np.abs(cols["re_rho12"])) < 1e-11


def test_evolve_linear_coherence(tmp_path):
    path = tmp_path / "e.csv"
    assert main(["evolve", *POST, "--rho0", "coherence", "--r0", "0.2", "--rho11", "0.5", "-o", str(path)]) == 0
    _, _, cols = read_csv(path)
    assert cols["re_rho12"][0] ** 2 + cols["im_rho12"][0] ** 2 == pytest.approx(0.04)
    assert np.hypot(cols["re_rho12"][-1], cols["im_rho12"][-1]) < 1e-4 * 0.2


def test_fig1(tmp_path, capsys):
    assert main(["fig1", "--output-dir", str(tmp_path), "--no-timestamp"]) == 0
    names = sorted(os.listdir(tmp_path))
    assert names == ["fig1_post_phi1.csv", "fig1_post_phi2.csv", "fig1_pre_phi1.csv",
                     "fig1_pre_phi2.csv"]
    cols = {n: read_csv(tmp_path / n)[2] for n in names}
    pre1, pre2 = cols["fig1_pre_phi1.csv"], cols["fig1_pre_phi2.csv"]
    post1, post2 = cols["fig1_post_phi1.csv"], cols["fig1_post_phi2.csv"]
    assert not np.allclose(pre1["abs_rho12"], pre2["abs_rho12"])
    p = SystemParams(beta=6.0, a_delta=0.002, dq=1.3)
    env = [coherence_envelope(p, c["re_rho12"] + 1j * c["im_rho12"]) for c in (pre1, pre2)]
    assert np.allclose(env[0], env[1], atol=1e-10)
    # past threshold the slow-mode weight depends on the initial phase
    late = post1["abs_rho12"][-100:] / post2["abs_rho12"][-100:]
    assert np.all(np.abs(late - 1) > 0.1)


def test_fig2(tmp_path, capsys):
    assert main(["fig2", "--output-dir", str(tmp_path), "--no-timestamp"]) == 0
    _, meta, cols = read_csv(tmp_path / "fig2.csv")
    k = int(meta["branch_index"])
    a_thr = float(meta["a_thr_over_delta"])
    assert cols["a_delta"][k - 1] < a_thr <= cols["a_delta"][k]


def test_scan_not_spanning(capsys):
    code, out, err = _run(capsys, "scan", "--beta", "6", "--a-min", "0.02", "--a-max", "0.05",
                          "--n", "5", "--no-timestamp")
    assert code == 0
    assert "warning" in err and "threshold" in err
    assert "a_delta" in out


def test_unwritable_output(capsys):
    code, _, err = _run(capsys, "rates", *POST, "-o", "/nonexistent/dir/out.txt")
    assert code == 3
    assert json.loads(err.strip().splitlines()[-1])["error"] == "IOError"


def test_deterministic(capsys):
    _, a, _ = _run(capsys, "scan", "--beta", "6", "--n", "50", "--no-timestamp")
    _, b, _ = _run(capsys, "scan", "--beta", "6", "--n", "50", "--no-timestamp")
    assert a == b


def test_config_round_trip(tmp_path, capsys):
    first = tmp_path / "a.csv"
    assert main(["spectrum", *POST, "--n-nu", "21", "-o", str(first)]) == 0
    second = tmp_path / "b.csv"
    assert main(["spectrum", "--config", str(first), "--no-timestamp", "-o", str(second)]) == 0
    a = first.read_text().splitlines()
    b = second.read_text().splitlines()
    assert [l for l in a if not l.startswith("# output")] == [l for l in b if not l.startswith("# output")]


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("beta = 6\na-delta = 0.002\ndq = 1.3\n")
    _, out, _ = _run(capsys, "rates", "--config", str(cfg), "--a-delta", "0.02")
    assert _table(out)["regime"] == "biexponential"
    _, out, _ = _run(capsys, "rates", "--config", str(cfg))
    assert _table(out)["regime"] == "oscillatory"


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("beta = 6\nbogus = 1\n")
    with pytest.raises(SystemExit) as exc:
        main(["rates", "--config", str(cfg), "--a-delta", "0.02"])
    assert exc.value.code == 2


def test_parse_config_formats():
    assert parse_config("# comment\nbeta = 6\na-delta=0.1\n") == {"beta": "6", "a_delta": "0.1"}


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    monkeypatch.setenv("DECOLAB_THREADS", "1")
    _, a, _ = _run(capsys, "scan", "--beta", "6", "--n", "80", "--no-timestamp")
    monkeypatch.setenv("DECOLAB_THREADS", "3")
    _, b, _ = _run(capsys, "scan", "--beta", "6", "--n", "80", "--no-timestamp")
    assert a == b


def test_evolve_rejects_non_positive_state(capsys):
    code, _, err = _run(capsys, "evolve", *POST, "--rho0", "coherence", "--r0", "0.2")
    assert code == 2
    assert "positive" in json.loads(err.strip().splitlines()[-1])["message"]
