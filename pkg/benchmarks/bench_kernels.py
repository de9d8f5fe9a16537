"""Compare the numba kernels with the pure-numpy fallback.

Runs each backend in a fresh interpreter (the switch is read at import time)
and prints per-call timings:

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from decolab import _jit, _kernels
from decolab.dynamics import NtmeControls, evolve_ntme
from decolab.model import SystemParams, kernel_operands
from decolab.qmat import bloch_vector

repeat = int(sys.argv[1])
p = SystemParams(beta=2.0, a_delta=0.05, dq=1.3)
energies, bohr, omegas, rates = kernel_operands(p)
rho = np.array([[0.7, 0.1 + 0.05j], [0.1 - 0.05j, 0.3]])
out = np.empty((2, 2), dtype=complex)
args = (energies, bohr, omegas, rates, p.beta_phys, 1e-12, 1e-8, out)

t0 = time.perf_counter()
_kernels.ntme_rhs_into(rho, *args)
warmup = time.perf_counter() - t0

n_rhs = 20000
best_rhs = float("inf")
for _ in range(repeat):
    t0 = time.perf_counter()
    for _ in range(n_rhs):
        _kernels.ntme_rhs_into(rho, *args)
    best_rhs = min(best_rhs, (time.perf_counter() - t0) / n_rhs)

t = np.linspace(0.0, 40.0, 11)
best_traj, steps = float("inf"), 0
for _ in range(repeat):
    t0 = time.perf_counter()
    traj = evolve_ntme(p, rho, t, NtmeControls(rtol=1e-9, atol=1e-12))
    best_traj = min(best_traj, time.perf_counter() - t0)
    steps = traj.stats["n_steps"]

print(json.dumps({"backend": _jit.backend(), "warmup_s": warmup, "rhs_us": best_rhs * 1e6,
                  "trajectory_s": best_traj, "steps": steps,
                  "final": traj.final.reshape(4).view(float).tolist()}))
"""


def run(disable, repeat):
    env = dict(os.environ, DECOLAB_DISABLE_JIT="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    jit = run(False, args.repeat)
    ref = run(True, 1)
    print(f"{'backend':<8} {'warmup [s]':>11} {'rhs [us]':>10} {'trajectory [s]':>15} {'steps':>7}")
    for r in (jit, ref):
        print(f"{r['backend']:<8} {r['warmup_s']:>11.3f} {r['rhs_us']:>10.2f} "
              f"{r['trajectory_s']:>15.4f} {r['steps']:>7d}")
    diff = max(abs(a - b) for a, b in zip(jit["final"], ref["final"]))
    print(f"speedup rhs {ref['rhs_us'] / jit['rhs_us']:.1f}x, "
          f"trajectory {ref['trajectory_s'] / jit['trajectory_s']:.1f}x; "
          f"final-state difference {diff:.2e}")


if __name__ == "__main__":
    main()
