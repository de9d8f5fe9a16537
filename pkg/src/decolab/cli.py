"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 computation error
(with a one-line JSON object on stderr).
"""
import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import io as dio
from .dynamics import NtmeControls, evolve_linear, evolve_ntme
from .errors import DecolabError, ValidationError
from .model import SystemParams, gibbs_populations, gibbs_state
from .response import dipole, susceptibility_dd, susceptibility_fdt
from .spectral import (BIEXPONENTIAL, bifurcation_scan, critical_angle, rates, t2t1_ratio,
                       threshold)

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_COMPUTE = 0, 2, 3, 4

# argparse bookkeeping that never enters the resolved config
_NON_CONFIG = {"command", "func", "config", "no_timestamp"}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "ValidationError", "message": message}), file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


# -- parser -----------------------------------------------------------------------

def _common(required=("beta", "a_delta")):
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("model parameters (rates in units of delta)")
    g.add_argument("--beta", type=float, help="dimensionless inverse temperature beta*delta")
    g.add_argument("--a-delta", type=float, help="absorption rate a(delta)/delta")
    g.add_argument("--a0", type=float, help="zero-frequency rate a(0)/delta (default: a-delta)")
    g.add_argument("--dq", type=float, default=0.0, help="dephasing weight |Q11-Q22|^2")
    g.add_argument("--delta", type=float, default=1.0, help="energy gap (unit of energy)")
    g.add_argument("--theta", type=float, default=0.0)
    g.add_argument("--mu", type=float, default=1.0)
    g.add_argument("--psi", type=float, default=0.0)
    g.add_argument("--convention", choices=("subtractive", "additive"), default="subtractive",
                   help="sign of pure dephasing in the coherence rate")
    io = parent.add_argument_group("input/output")
    io.add_argument("--config", help="flat key=value file (or an emitted CSV); flags win")
    io.add_argument("-o", "--output", help="output CSV path (default: stdout)")
    io.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    parent.set_defaults(_required=required)
    return parent


def build_parser():
    parser = _ArgumentParser(prog="decolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)
    sub.required = True

    p = sub.add_parser("rates", parents=[_common()], help="closed-form rates and regime")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("threshold", parents=[_common(("beta",))], help="threshold absorption rate")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("evolve", parents=[_common()], help="propagate a state")
    p.add_argument("--engine", choices=("linear", "ntme"), default="linear")
    p.add_argument("--generator", choices=("analytic", "kubo-mori", "numerical", "ldme"),
                   default="analytic", help="linear engine generator")
    p.add_argument("--rho0", choices=("gibbs", "coherence"), default="coherence")
    p.add_argument("--r0", type=float, default=0.05)
    p.add_argument("--phi0", type=float, default=np.pi / 5)
    p.add_argument("--rho11", type=float, help="initial ground population (default: Gibbs)")
    p.add_argument("--t-max", type=float, help="end time in 1/delta (default: 10 slow decay times)")
    p.add_argument("--n-t", type=int, default=1001)
    p.add_argument("--rtol", type=float, default=1e-9)
    p.add_argument("--atol", type=float, default=1e-12)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("spectrum", parents=[_common()], help="linear susceptibility")
    p.add_argument("--obs", choices=("dipole", "sigma-x", "sigma-y", "sigma-z"), default="dipole")
    p.add_argument("--method", choices=("closed", "fdt"), default="closed")
    p.add_argument("--nu-min", type=float, default=0.0)
    p.add_argument("--nu-max", type=float, help="default: 10 max(delta, Re Lambda+)")
    p.add_argument("--n-nu", type=int, default=1001)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("scan", parents=[_common(("beta",))], help="bifurcation scan over a(delta)")
    _scan_args(p, 0.001, 0.05, 491)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("critical-angle", parents=[_common()], help="phase removing the fast mode")
    p.set_defaults(func=cmd_critical_angle)

    p = sub.add_parser("fig1", parents=[_common(())], help="coherence trajectories, both regimes")
    p.add_argument("--output-dir", default=".")
    p.add_argument("--a-pre", type=float, default=0.002)
    p.add_argument("--a-post", type=float, default=0.02)
    p.add_argument("--r0", type=float, default=0.05)
    p.add_argument("--phi0", type=float, default=np.pi / 5)
    p.add_argument("--phi-shift", type=float, default=np.pi / 2)
    p.add_argument("--rho11", type=float, default=0.5)
    p.add_argument("--n-t", type=int, default=1001)
    p.set_defaults(func=cmd_fig1, beta=6.0, dq=1.3)

    p = sub.add_parser("fig2", parents=[_common(())], help="bifurcation diagram")
    p.add_argument("--output-dir", default=".")
    _scan_args(p, 0.001, 0.05, 491)
    p.set_defaults(func=cmd_fig2, beta=6.0, dq=1.3)
    return parser


def _scan_args(p, lo, hi, n):
    p.add_argument("--a-min", type=float, default=lo)
    p.add_argument("--a-max", type=float, default=hi)
    p.add_argument("--n", type=int, default=n)


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = dio.read_config(args.config)
        except OSError as exc:
            raise _IOFailure(str(exc)) from exc
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            sub.error(f"unknown config keys: {', '.join(unknown)}")
        cfg = {k: (None if v == "" else v) for k, v in cfg.items()}
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    missing = [k for k in args._required if getattr(args, k) is None]
    if missing:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.error("the following arguments are required: "
                  + ", ".join("--" + k.replace("_", "-") for k in missing))
    return args


class _IOFailure(Exception):
    pass


def resolved_config(args):
    return {k: v for k, v in vars(args).items() if k not in _NON_CONFIG and not k.startswith("_")}


def params_from(args, **overrides):
    """SystemParams from CLI values; rates given per unit delta are scaled by delta."""
    d = args.delta
    a_delta = overrides.pop("a_delta", args.a_delta)
    a0 = args.a0
    return SystemParams(beta=args.beta, a_delta=a_delta * d, a0=None if a0 is None else a0 * d,
                        dq=args.dq, delta=d, theta=args.theta, mu=args.mu, psi=args.psi,
                        convention=args.convention, **overrides)


def _emit(args, columns, command, meta=None, path=None):
    path = path or args.output
    text = dio.render_csv(columns, command, resolved_config(args), meta,
                          timestamp=not args.no_timestamp)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


def _fmt(v):
    if isinstance(v, complex):
        return f"{v.real:.10g}{v.imag:+.10g}j"
    return f"{v:.10g}" if isinstance(v, float) else str(v)


def _print_table(rows):
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {_fmt(v)}")


# -- commands ---------------------------------------------------------------------

def cmd_rates(args):
    p = params_from(args)
    rs = rates(p)
    ratio = t2t1_ratio(p).ratio if rs.regime == BIEXPONENTIAL else None
    rows = [("gamma1", float(rs.gamma1)), ("t1", float(rs.t1)), ("x", float(rs.x)),
            ("y", float(rs.y)), ("z", float(rs.z)), ("gamma2_star", float(rs.gamma2_star)),
            ("omega", complex(rs.omega)), ("lambda_plus", complex(rs.lambda_plus)),
            ("lambda_minus", complex(rs.lambda_minus)), ("a_thr", float(rs.a_thr)),
            ("regime", rs.regime), ("t2m_over_t1", "n/a" if ratio is None else float(ratio))]
    if args.output:
        cols = {"quantity": [k for k, _ in rows], "value": [_fmt(v) for _, v in rows]}
        _emit(args, cols, "rates")
    _print_table(rows)


def cmd_threshold(args):
    p = SystemParams(beta=args.beta, a_delta=0.0, delta=args.delta)
    a = threshold(p)
    _print_table([("a_thr", float(a)), ("a_thr_over_delta", float(a / p.delta))])


def _initial_state(args, p):
    if args.rho0 == "gibbs":
        return gibbs_state(p)
    rho11 = gibbs_populations(p.beta)[0] if args.rho11 is None else args.rho11
    r = args.r0 * np.exp(1j * args.phi0)
    rho = np.array([[rho11, r], [np.conj(r), 1 - rho11]], dtype=complex)
    if args.r0 ** 2 > rho11 * (1 - rho11):
        raise ValidationError(f"r0^2 = {args.r0 ** 2:.6g} exceeds rho11*rho22 = "
                              f"{rho11 * (1 - rho11):.6g}; the state would not be positive")
    return rho


def _slow_time(p):
    rs = rates(p)
    slow = min(rs.lambda_minus.real, rs.gamma1 if rs.gamma1 > 0 else np.inf)
    if not np.isfinite(slow) or slow <= 0:
        return 10.0 / p.delta
    return 10.0 / slow


def cmd_evolve(args):
    p = params_from(args)
    rho0 = _initial_state(args, p)
    t_max = args.t_max if args.t_max is not None else _slow_time(p)
    if t_max <= 0 or args.n_t < 2:
        raise ValidationError("need t-max > 0 and n-t >= 2")
    t = np.linspace(0.0, t_max, args.n_t)
    if args.engine == "linear":
        traj = evolve_linear(p, rho0, t, generator=args.generator)
    else:
        traj = evolve_ntme(p, rho0, t, NtmeControls(rtol=args.rtol, atol=args.atol))
    meta = {"engine": args.engine, "t_max_resolved": t_max, **_stats_meta(traj)}
    _emit(args, traj.columns(), "evolve", meta)


def _stats_meta(traj):
    return {f"stat_{k}": v for k, v in traj.stats.items()}


def _observable(args, p):
    from .qmat import SIGMA_X, SIGMA_Y, SIGMA_Z
    return {"dipole": dipole(p), "sigma-x": SIGMA_X, "sigma-y": SIGMA_Y, "sigma-z": SIGMA_Z}[args.obs]


def cmd_spectrum(args):
    p = params_from(args)
    nu_max = args.nu_max if args.nu_max is not None else 10 * max(p.delta, rates(p).lambda_plus.real)
    if args.n_nu < 2 or nu_max <= args.nu_min:
        raise ValidationError("need n-nu >= 2 and nu-max > nu-min")
    nu = np.linspace(args.nu_min, nu_max, args.n_nu)
    if args.method == "closed":
        if args.obs != "dipole":
            raise ValidationError("the closed form covers only the dipole observable; use --method fdt")
        s = susceptibility_dd(p, nu)
    else:
        a = _observable(args, p)
        s = susceptibility_fdt(a, a, p, nu)
    cols = {"nu": s.nu, "re_chi": s.chi.real, "im_chi": s.chi.imag}
    meta = {"nu_max_resolved": nu_max, "flagged_samples": int(np.sum(s.flags))}
    _emit(args, cols, "spectrum", meta)


def _scan(args):
    if args.a_delta is not None:
        base = params_from(args)
    else:
        base = params_from(args, a_delta=args.a_min)
    d = args.delta
    table = bifurcation_scan(base, (args.a_min * d, args.a_max * d), args.n)
    if not table.spans_threshold:
        warnings.warn(f"a-range [{args.a_min:g}, {args.a_max:g}] does not contain the "
                      f"threshold {table.a_thr / d:.7g}; no branch point in this scan", stacklevel=2)
    cols = {c: getattr(table, c) for c in table.columns}
    cols["a_delta"] = table.a_delta / d
    branch = table.branch_index()
    meta = {"a_thr_over_delta": table.a_thr / d, "branch_index": -1 if branch is None else branch,
            "a0_follows_a_delta": base.a0_defaulted}
    return cols, meta


def cmd_scan(args):
    cols, meta = _scan(args)
    _emit(args, cols, "scan", meta)


def cmd_critical_angle(args):
    p = params_from(args)
    ca = critical_angle(p)
    rows = [("phi_c", ca.phi), ("phi_c_equivalent", ca.equivalent), ("residual", ca.residual)]
    if args.output:
        _emit(args, {"quantity": [k for k, _ in rows], "value": [v for _, v in rows]},
              "critical-angle")
    _print_table(rows)


def _outdir(args):
    try:
        os.makedirs(args.output_dir, exist_ok=True)
    except OSError as exc:
        raise _IOFailure(f"cannot create {args.output_dir}: {exc}") from exc
    return args.output_dir


def cmd_fig1(args):
    out = _outdir(args)
    rho11 = args.rho11
    if args.r0 ** 2 > rho11 * (1 - rho11):
        raise ValidationError("r0^2 exceeds rho11*rho22; choose a smaller r0 or rho11 closer to 1/2")
    written = []
    for panel, a in (("pre", args.a_pre), ("post", args.a_post)):
        p = params_from(args, a_delta=a)
        rs = rates(p)
        t = np.linspace(0.0, 10.0 / rs.lambda_minus.real, args.n_t)
        for k, phi in ((1, args.phi0), (2, args.phi0 + args.phi_shift)):
            r = args.r0 * np.exp(1j * phi)
            rho0 = np.array([[rho11, r], [np.conj(r), 1 - rho11]], dtype=complex)
            traj = evolve_linear(p, rho0, t)
            cols = traj.columns()
            cols["abs_rho12"] = np.abs(traj.rho12)
            meta = {"panel": panel, "a_delta_panel": a, "phi0_panel": phi, "regime": rs.regime,
                    "a0_follows_a_delta": p.a0_defaulted}
            path = os.path.join(out, f"fig1_{panel}_phi{k}.csv")
            _emit(args, cols, "fig1", meta, path)
            written.append(path)
    for path in written:
        print(path)


def cmd_fig2(args):
    out = _outdir(args)
    cols, meta = _scan(args)
    path = args.output or os.path.join(out, "fig2.csv")
    _emit(args, cols, "fig2", meta, path)
    print(path)


# -- entry point ------------------------------------------------------------------

def _fail(code, exc):
    name = "IOError" if isinstance(exc, _IOFailure) else type(exc).__name__
    print(json.dumps({"error": name, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = parse_args(argv)
    except _IOFailure as exc:
        return _fail(EXIT_IO, exc)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        warnings.showwarning = _show_warning
        try:
            args.func(args)
        except ValidationError as exc:
            return _fail(EXIT_VALIDATION, exc)
        except _IOFailure as exc:
            return _fail(EXIT_IO, exc)
        except DecolabError as exc:
            return _fail(EXIT_COMPUTE, exc)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            return _fail(EXIT_COMPUTE, exc)
    return EXIT_OK


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
