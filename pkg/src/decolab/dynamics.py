"""Time evolution: linear Liouville propagation and the nonlinear NTME flow."""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

from . import _kernels
from .config import DEFAULT_TOLERANCES
from .errors import (ConvergenceError, RankDeficientError, StepSizeUnderflowError,
                     ValidationError)
from .generators import generator as make_generator
from .model import gibbs_state, kernel_operands
from .qmat import bloch_vector, require_hermitian

_CHUNK = 4096


def _eigs2(states):
    """Ascending eigenvalues of a stack of Hermitian 2x2 matrices."""
    a = states[:, 0, 0].real
    d = states[:, 1, 1].real
    b = states[:, 0, 1]
    mean = 0.5 * (a + d)
    r = np.sqrt((0.5 * (a - d)) ** 2 + np.abs(b) ** 2)
    return np.stack([mean - r, mean + r], axis=1)


def _entropy(eigs):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(eigs > 0, -eigs * np.log(np.where(eigs > 0, eigs, 1.0)), 0.0)
    s = terms.sum(axis=1)
    s[np.any(eigs < 0, axis=1)] = np.nan
    return s


class Trajectory:
    """States on a time grid with conservation and thermodynamic monitors.

    ``stats`` summarizes every accepted integrator step, which may be a finer
    set than the stored grid.
    """

    def __init__(self, t, states, p, meta=None, stats=None):
        self.t = np.asarray(t, dtype=float)
        self.states = np.asarray(states, dtype=complex)
        self.params = p
        self.meta = dict(meta or {})
        tr = self.states[:, 0, 0] + self.states[:, 1, 1]
        self.trace_dev = np.abs(tr - 1.0)
        eigs = _eigs2(self.states)
        self.min_eig = eigs[:, 0]
        self.entropy = _entropy(eigs)
        energies = np.array([-0.5, 0.5]) * p.delta
        energy = (self.states[:, 0, 0].real * energies[0] + self.states[:, 1, 1].real * energies[1])
        self.free_energy = energy - self.entropy / p.beta_phys
        diff = self.states - gibbs_state(p)[None]
        self.gibbs_distance = 2 * np.sqrt((0.5 * (diff[:, 0, 0].real - diff[:, 1, 1].real)) ** 2
                                          + np.abs(diff[:, 0, 1]) ** 2)
        self.stats = stats if stats is not None else self._grid_stats()

    def _grid_stats(self):
        df = np.diff(self.free_energy)
        return {
            "max_trace_dev": float(np.max(self.trace_dev)),
            "min_eig": float(np.min(self.min_eig)),
            "max_free_energy_rise": float(np.max(df, initial=-np.inf)),
            "n_steps": len(self.t) - 1,
        }

    def __len__(self):
        return len(self.t)

    @property
    def rho11(self):
        return self.states[:, 0, 0].real

    @property
    def rho22(self):
        return self.states[:, 1, 1].real

    @property
    def rho12(self):
        return self.states[:, 0, 1]

    @property
    def final(self):
        return self.states[-1]

    def columns(self):
        """Column arrays of the trajectory CSV schema."""
        return {
            "t": self.t,
            "rho11": self.rho11,
            "re_rho12": self.rho12.real,
            "im_rho12": self.rho12.imag,
            "rho22": self.rho22,
            "trace_dev": self.trace_dev,
            "min_eig": self.min_eig,
            "entropy": self.entropy,
            "free_energy": self.free_energy,
        }


def _check_state(rho0, tol):
    rho0 = require_hermitian(rho0, "rho0", tol)
    if abs(np.trace(rho0) - 1) > 1e-10:
        raise ValidationError("rho0 must have unit trace")
    if np.min(np.linalg.eigvalsh(rho0)) < -1e-12:
        raise ValidationError("rho0 must be positive semidefinite")
    return rho0


def _time_grid(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.ndim != 1 or t.size < 1 or not np.all(np.isfinite(t)):
        raise ValidationError("time grid must be a finite 1-D array")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("time grid must be strictly increasing")
    return t


def propagate_linear(gen, v0, t, tol=DEFAULT_TOLERANCES):
    """e^{L t} v0 on a grid, by eigendecomposition or scaling-and-squaring.

    The eigen route is used unless the eigenvector matrix is ill-conditioned
    (a defective generator at the degenerate point).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lam, vec = np.linalg.eig(gen)
    if np.linalg.cond(vec) < tol.defective_cond:
        c = np.linalg.solve(vec, v0)
        return (np.exp(np.outer(t, lam)) * c) @ vec.T
    return np.array([expm(gen * ti) @ v0 for ti in t])


def evolve_linear(p, rho0, t, generator="analytic", tol=DEFAULT_TOLERANCES):
    """Propagate rho0 under a linear generator.

    ``generator`` is a kind accepted by :func:`decolab.generators.generator`
    or an explicit ``(4, 4)`` matrix.
    """
    rho0 = _check_state(rho0, tol)
    t = _time_grid(t)
    if isinstance(generator, str):
        kind = generator
        gen = make_generator(p, generator)
    else:
        kind = "custom"
        gen = np.asarray(generator, dtype=complex)
        if gen.shape != (4, 4):
            raise ValidationError("generator must be 4x4")
    v = propagate_linear(gen, rho0.reshape(4), t - t[0], tol)
    return Trajectory(t, v.reshape(-1, 2, 2), p, {"engine": "linear", "generator": kind})


@dataclass
class NtmeControls:
    rtol: float = DEFAULT_TOLERANCES.rtol
    atol: float = DEFAULT_TOLERANCES.atol
    h0: float | None = None
    hmin: float = 1e-14
    max_steps: int = 10_000_000
    stop_distance: float = 0.0        # halt once ||rho - pi||_tr <= this (0 disables)
    record_steps: bool = False        # keep every accepted step instead of the requested grid

    def as_dict(self):
        return {"rtol": self.rtol, "atol": self.atol, "h0": self.h0, "hmin": self.hmin,
                "max_steps": self.max_steps, "stop_distance": self.stop_distance}


def evolve_ntme(p, rho0, t, controls=None, tol=DEFAULT_TOLERANCES):
    """Integrate the nonlinear master equation with adaptive Dormand-Prince 5(4).

    The state is carried as its Bloch vector, so trace and hermiticity are
    exact. A step is accepted only when it passes the error test, keeps both
    eigenvalues above the rank floor, and does not raise the free energy by
    more than ``tol.free_energy * |F(0)|``.

    ``t`` is the output grid; integration starts at ``t[0]``. With
    ``controls.stop_distance > 0`` the run ends early once the trace distance
    to the Gibbs state falls below it, and the trajectory is truncated there.
    """
    c = controls or NtmeControls()
    rho0 = _check_state(rho0, tol)
    t = _time_grid(t)
    if np.min(np.linalg.eigvalsh(rho0)) < tol.rank_floor:
        raise RankDeficientError("initial state below the rank floor",
                                 min_eigenvalue=float(np.min(np.linalg.eigvalsh(rho0))))
    energies, bohr, omegas, rates = kernel_operands(p)
    beta = p.beta_phys
    v = bloch_vector(rho0)
    f0 = float(_kernels.bloch_free_energy(v, energies, beta))
    f_tol = tol.free_energy * max(abs(f0), 1e-300)
    target = bloch_vector(gibbs_state(p))
    # trace distance = |v - v_pi|
    target_dist = float(c.stop_distance)
    h = c.h0 if c.h0 else min(1e-2 / max(p.delta, 1e-300), max(t[-1] - t[0], 1e-12))
    stops = t[1:].copy()

    all_t, all_v, all_f = [np.array([t[0]])], [v[None, :]], [np.array([f0])]
    t_cur, stop_index, n_rej_total, status = t[0], 0, 0, _kernels.DONE
    out_t = np.empty(_CHUNK)
    out_v = np.empty((_CHUNK, 3))
    out_f = np.empty(_CHUNK)
    out_rej = np.empty(_CHUNK, dtype=np.int64)
    steps_left = c.max_steps
    while True:
        n, status, t_cur, v, h, stop_index, n_rej = _kernels.dp45_integrate(
            v, t_cur, t[-1], h, c.rtol, c.atol, c.hmin, stops, stop_index, steps_left,
            energies, bohr, omegas, rates, beta, tol.rank_floor, tol.lambda_series,
            f_tol, target, target_dist, out_t, out_v, out_f, out_rej)
        all_t.append(out_t[:n].copy())
        all_v.append(out_v[:n].copy())
        all_f.append(out_f[:n].copy())
        n_rej_total += n_rej
        steps_left -= n + n_rej
        if status != _kernels.BUFFER_FULL:
            break

    ts = np.concatenate(all_t)
    vs = np.concatenate(all_v)
    fs = np.concatenate(all_f)
    if status == _kernels.STEP_RANK:
        r = float(np.linalg.norm(v))
        raise RankDeficientError(
            f"NTME state reached the rank floor at t = {t_cur:.6g}", min_eigenvalue=0.5 * (1 - r))
    if status == _kernels.STEP_UNDERFLOW:
        raise StepSizeUnderflowError(
            f"step size {h:.3e} fell below hmin = {c.hmin:g} at t = {t_cur:.6g}", t=t_cur, h=h)
    if status == _kernels.MAX_STEPS:
        raise ConvergenceError(f"max_steps = {c.max_steps} exhausted at t = {t_cur:.6g}")

    radius = np.linalg.norm(vs, axis=1)
    stats = {
        "max_trace_dev": 0.0,
        "min_eig": float(np.min(0.5 * (1 - radius))),
        "max_free_energy_rise": float(np.max(np.diff(fs), initial=-np.inf)),
        "free_energy_tol": f_tol,
        "n_steps": len(ts) - 1,
        "n_rejected": int(n_rej_total),
        "reached_target": status == _kernels.REACHED_TARGET,
        "final_distance": float(np.linalg.norm(vs[-1] - target)),
    }
    if c.record_steps:
        keep = np.arange(len(ts))
    else:
        keep = np.flatnonzero(np.isin(ts, t))
    states = np.array([_bloch_to_rho(x) for x in vs[keep]])
    meta = {"engine": "ntme", "status": int(status), **c.as_dict()}
    return Trajectory(ts[keep], states, p, meta, stats)


def _bloch_to_rho(v):
    return 0.5 * np.array([[1 + v[2], v[0] - 1j * v[1]], [v[0] + 1j * v[1], 1 - v[2]]])


# -- decay fitting --------------------------------------------------------------

MODELS = ("single-exp", "double-exp", "damped-osc")


@dataclass(frozen=True)
class DecayFit:
    model: str
    rates: tuple
    frequency: float | None
    amplitudes: tuple
    residual: float
    flagged: bool
    message: str = ""


def _basis(model, q, t):
    if model == "single-exp":
        return np.exp(-q[0] * t)[:, None]
    if model == "double-exp":
        return np.stack([np.exp(-q[0] * t), np.exp(-q[1] * t)], axis=1)
    env = np.exp(-q[0] * t)
    return np.stack([env * np.exp(1j * q[1] * t), env * np.exp(-1j * q[1] * t)], axis=1)


def _project(model, q, t, y):
    phi = _basis(model, q, t)
    coef, *_ = np.linalg.lstsq(phi, y, rcond=None)
    return coef, y - phi @ coef


def _prony(t, y, order):
    """Poles of a sum of ``order`` exponentials by linear prediction on a uniform grid."""
    tu = np.linspace(t[0], t[-1], len(t))
    yu = np.interp(tu, t, y.real) + 1j * np.interp(tu, t, y.imag)
    dt = tu[1] - tu[0]
    m = len(yu) - order
    a = np.stack([yu[k:k + m] for k in range(order)], axis=1)
    coef, *_ = np.linalg.lstsq(a, yu[order:order + m], rcond=None)
    roots = np.roots(np.concatenate([[1.0], -coef[::-1]]))
    return -np.log(roots.astype(complex)) / dt


def _initial_guess(model, t, y):
    if model == "single-exp":
        s = _prony(t, y, 1)
        return [max(s[0].real, 1e-12)]
    s = _prony(t, y, 2)
    if model == "double-exp":
        k = sorted(max(v.real, 1e-12) for v in s)
        if abs(k[1] - k[0]) < 1e-9 * max(k[1], 1e-12):
            k[1] = k[0] * 1.1 + 1e-9
        return [k[1], k[0]]
    gamma = max(float(np.mean(s.real)), 1e-12)
    omega = float(np.max(np.abs(s.imag)))
    return [gamma, omega]


def decay_fit(traj, model="double-exp", t=None, series=None):
    """Fit exponential decay models to the complex coherence rho12(t).

    Variable projection: the (complex) amplitudes are solved linearly and only
    the rates are optimized. Models
      single-exp   c e^{-k t}
      double-exp   c1 e^{-k1 t} + c2 e^{-k2 t}   (rates returned fast first)
      damped-osc   e^{-g t}(c1 e^{i w t} + c2 e^{-i w t})

    Pass ``t`` and ``series`` to fit an arbitrary (possibly real) signal
    instead of a trajectory's coherence. The residual is ||fit - data||/||data||.
    """
    if model not in MODELS:
        raise ValidationError(f"model must be one of {MODELS}")
    if series is None:
        t, y = traj.t, traj.rho12
    else:
        t, y = np.asarray(t, dtype=float), np.asarray(series, dtype=complex)
    t = t - t[0]
    if len(t) < 8:
        raise ValidationError("need at least 8 samples to fit")
    norm = np.linalg.norm(y)
    if norm == 0:
        raise ValidationError("cannot fit an identically zero signal")
    ys = y / norm

    def resid(q):
        _, r = _project(model, q, t, ys)
        return np.concatenate([r.real, r.imag])

    q0 = _initial_guess(model, t, ys)
    res = least_squares(resid, q0, xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        x_scale=np.maximum(np.abs(q0), 1e-6), max_nfev=5000, method="lm")
    q = res.x
    coef, r = _project(model, q, t, ys)
    residual = float(np.linalg.norm(r))
    flagged, msg = False, ""
    if not res.success:
        flagged, msg = True, res.message
    try:
        jac_cond = np.linalg.cond(res.jac)
        if not np.isfinite(jac_cond) or jac_cond > 1e12:
            flagged, msg = True, f"ill-conditioned fit (cond {jac_cond:.2e})"
    except np.linalg.LinAlgError:
        flagged, msg = True, "singular Jacobian"
    amps = tuple(complex(c * norm) for c in coef)
    if model == "double-exp":
        order = np.argsort(q)[::-1]
        rates = tuple(float(q[i]) for i in order)
        amps = tuple(amps[i] for i in order)
        return DecayFit(model, rates, None, amps, residual, flagged, msg)
    if model == "damped-osc":
        return DecayFit(model, (float(q[0]),), float(abs(q[1])), amps, residual, flagged, msg)
    return DecayFit(model, (float(q[0]),), None, amps, residual, flagged, msg)


def assert_converged(traj, tol=1e-8):
    d = traj.stats.get("final_distance", float(traj.gibbs_distance[-1]))
    if d > tol:
        raise ConvergenceError(f"final trace distance to Gibbs {d:.3e} exceeds {tol:g}")
    return d
