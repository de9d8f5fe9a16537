"""Closed-form spectral analysis of the analytic linearized generator.

Eigenvalues are 0, -Gamma1 and -Lambda_pm with Lambda_pm = y +- Omega,
Omega = sqrt(z^2 - Delta^2) taken on the principal branch (purely imaginary
with positive imaginary part below threshold). Lambda_plus is the fast
decay constant past threshold.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import NotBifurcatedError, ValidationError
from .generators import linear_coefficients

OSCILLATORY = "oscillatory"
BIEXPONENTIAL = "biexponential"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class RateSet:
    x: float
    y: float
    z: float
    gamma1: float
    gamma2_star: float
    omega: complex
    lambda_plus: complex
    lambda_minus: complex
    a_thr: float
    regime: str
    delta: float

    @property
    def physical(self):
        """The analytic parameters are stated to be positive."""
        return self.y >= 0

    @property
    def t1(self):
        return 1.0 / self.gamma1 if self.gamma1 > 0 else np.inf

    @property
    def gamma2(self):
        """Decoherence rates: one value below threshold, (fast, slow) above."""
        if self.regime == BIEXPONENTIAL:
            return (self.lambda_plus.real, self.lambda_minus.real)
        return (self.y,)

    def eigenvalues(self):
        return np.array([0.0, -self.gamma1, -self.lambda_plus, -self.lambda_minus])


def _regime(z, delta, tol):
    if abs(z - delta) <= tol.regime * delta:
        return DEGENERATE
    return BIEXPONENTIAL if z > delta else OSCILLATORY


def rates(p, tol=DEFAULT_TOLERANCES):
    x, y, z = linear_coefficients(p)
    om = np.sqrt(complex(z * z - p.delta * p.delta))
    return RateSet(
        x=x, y=y, z=z,
        gamma1=(1.0 + np.exp(p.beta)) * x,
        gamma2_star=p.gamma2_star,
        omega=om,
        lambda_plus=y + om,
        lambda_minus=y - om,
        a_thr=threshold(p),
        regime=_regime(z, p.delta, tol),
        delta=p.delta,
    )


def threshold(p):
    """Absorption rate a(Delta) at which z = Delta."""
    half = 0.5 * p.beta
    return p.delta * np.exp(-half) * np.tanh(half) / half


@dataclass(frozen=True)
class CoherenceSolution:
    """rho12(t) = amp_plus e^{-Lambda_plus t} + amp_minus e^{-Lambda_minus t}."""
    amp_plus: complex
    amp_minus: complex
    lambda_plus: complex
    lambda_minus: complex
    r0: float
    phi0: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.amp_plus * np.exp(-self.lambda_plus * t) + self.amp_minus * np.exp(-self.lambda_minus * t)


def coherence_solution(p, r0, phi0):
    """Mode amplitudes of the coherence for rho12(0) = r0 e^{i phi0}.

    With w = z e^{i(2 theta - phi0)} the slow mode carries
    (r0/2 Omega)[(i Delta + Omega) e^{i phi0} + w] and the fast mode
    -(r0/2 Omega)[(i Delta - Omega) e^{i phi0} + w].
    """
    rs = rates(p)
    om = rs.omega
    if om == 0:
        raise ValidationError("mode amplitudes diverge at the degenerate point Omega = 0")
    e = np.exp(1j * phi0)
    w = rs.z * np.exp(1j * (2 * p.theta - phi0))
    amp_minus = r0 / (2 * om) * ((1j * p.delta + om) * e + w)
    amp_plus = -r0 / (2 * om) * ((1j * p.delta - om) * e + w)
    return CoherenceSolution(amp_plus, amp_minus, rs.lambda_plus, rs.lambda_minus, r0, phi0)


def coherence_evolution(p, r0, phi0, t, tol=DEFAULT_TOLERANCES):
    """rho12(t) of the linearized dynamics for rho12(0) = r0 e^{i phi0}.

    Near Omega = 0 the two-mode form is replaced by its confluent limit
    r0 e^{-y t}[e^{i phi0} cosh(Omega t) + K sinh(Omega t)/Omega].
    """
    t = np.asarray(t, dtype=float)
    rs = rates(p)
    if abs(rs.omega) >= tol.omega_switch * p.delta:
        return coherence_solution(p, r0, phi0)(t)
    e = np.exp(1j * phi0)
    k = 1j * p.delta * e + rs.z * np.exp(1j * (2 * p.theta - phi0))
    om = rs.omega
    # cosh and sinh(x)/x to second order in Omega^2 t^2
    s = (om * t) ** 2
    cosh = 1 + s / 2 + s * s / 24
    sinhc = t * (1 + s / 6 + s * s / 120)
    return r0 * np.exp(-rs.y * t) * (e * cosh + k * sinhc)


def coherence_envelope(p, rho12):
    """Normalized decay envelope sqrt(E(t)/E(0)) of a coherence trajectory.

    E = Delta |rho12|^2 - z Im(e^{-2i theta} rho12^2) is conserved by the
    undamped coherence dynamics and positive below threshold, so the
    envelope equals e^{-y t} for every initial phase.
    """
    rho12 = np.asarray(rho12, dtype=complex)
    _, _, z = linear_coefficients(p)
    energy = p.delta * np.abs(rho12) ** 2 - z * np.imag(np.exp(-2j * p.theta) * rho12 ** 2)
    if energy[0] <= 0:
        raise ValidationError("envelope is defined only when the invariant is positive (below threshold)")
    return np.sqrt(np.clip(energy / energy[0], 0, None))


@dataclass(frozen=True)
class CriticalAngle:
    phi: float
    residual: float

    @property
    def equivalent(self):
        """The other initial phase (phi + pi) with the same property."""
        return (self.phi + np.pi) % (2 * np.pi)


def critical_angle(p, tol=DEFAULT_TOLERANCES):
    """Initial coherence phase that removes the fast (Lambda_plus) mode.

    Solves e^{2i(theta - phi)} = (Omega - i Delta)/z, i.e.
    phi = theta + arccos(Omega/z)/2 (mod pi), and verifies it by substitution.
    """
    rs = rates(p, tol)
    if rs.regime != BIEXPONENTIAL:
        raise NotBifurcatedError(f"critical angle needs z > Delta (z = {rs.z:.6g}, regime {rs.regime})")
    om = rs.omega.real
    target = (om - 1j * p.delta) / rs.z
    phi = (p.theta + 0.5 * np.arccos(np.clip(om / rs.z, -1, 1))) % np.pi
    residual = abs(np.exp(2j * (p.theta - phi)) - target)
    if residual > 1e-10:
        raise NotBifurcatedError(f"substitution check failed, residual {residual:.3e}")
    return CriticalAngle(float(phi), float(residual))


def fast_mode_amplitude(p, phi0, r0=1.0):
    return coherence_solution(p, r0, phi0).amp_plus


@dataclass(frozen=True)
class ScanTable:
    a_delta: np.ndarray
    gamma1: np.ndarray
    re_lambda_plus: np.ndarray
    re_lambda_minus: np.ndarray
    im_lambda_plus: np.ndarray
    regime: np.ndarray
    t2m_over_t1: np.ndarray
    a_thr: float

    columns = ("a_delta", "gamma1", "re_lambda_plus", "re_lambda_minus", "im_lambda_plus",
               "regime", "t2m_over_t1")

    def __len__(self):
        return len(self.a_delta)

    @property
    def spans_threshold(self):
        return bool(self.a_delta[0] <= self.a_thr <= self.a_delta[-1])

    def branch_index(self):
        """Index of the first biexponential sample after an oscillatory one, or None."""
        bi = self.regime != OSCILLATORY
        for i in range(1, len(bi)):
            if bi[i] and not bi[i - 1]:
                return i
        return None

    def rows(self):
        for i in range(len(self)):
            yield tuple(getattr(self, c)[i] for c in self.columns)


def _workers():
    try:
        return max(1, int(os.environ.get("DECOLAB_THREADS", "1")))
    except ValueError:
        return 1


def bifurcation_scan(p, a_range, n, workers=None):
    """Rates on a uniform a(Delta) grid.

    a(0) follows a(Delta) when ``p.a0_defaulted`` is set, otherwise stays fixed.
    ``workers`` (default: ``DECOLAB_THREADS``) caps the thread pool; rows keep
    grid order.
    """
    lo, hi = a_range
    if n < 2 or lo <= 0 or hi <= lo:
        raise ValidationError("need n >= 2 and 0 < a_min < a_max")
    grid = np.linspace(lo, hi, n)
    workers = workers or _workers()

    def one(a):
        return rates(p.replace(a_delta=float(a)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rs = list(pool.map(one, grid))
    else:
        rs = [one(a) for a in grid]
    re_minus = np.array([r.lambda_minus.real for r in rs])
    g1 = np.array([r.gamma1 for r in rs])
    return ScanTable(
        a_delta=grid,
        gamma1=g1,
        re_lambda_plus=np.array([r.lambda_plus.real for r in rs]),
        re_lambda_minus=re_minus,
        im_lambda_plus=np.array([r.lambda_plus.imag for r in rs]),
        regime=np.array([r.regime for r in rs]),
        t2m_over_t1=g1 / re_minus,
        a_thr=threshold(p),
    )


@dataclass(frozen=True)
class T2T1:
    t1: float
    t2: float
    ratio: float
    mode: str
    bifurcated: bool

    @property
    def exceeds_bound(self):
        """T2 > 2 T1."""
        return self.t2 > 2 * self.t1


def t2t1_ratio(p, mode="t2/t1", strict=True):
    """Slow decoherence time against the energy relaxation time.

    ``mode`` selects ``"t2/t1"`` or ``"2t1/t2"``. Below threshold this raises
    :class:`NotBifurcatedError` unless ``strict=False``, in which case the
    single T2 = 1/y is used.
    """
    if mode not in ("t2/t1", "2t1/t2"):
        raise ValidationError("mode must be 't2/t1' or '2t1/t2'")
    rs = rates(p)
    bifurcated = rs.regime == BIEXPONENTIAL
    if not bifurcated and strict:
        raise NotBifurcatedError("T2- exists only past threshold; pass strict=False for the single T2")
    t1 = rs.t1
    t2 = 1.0 / rs.lambda_minus.real
    ratio = t2 / t1 if mode == "t2/t1" else 2 * t1 / t2
    return T2T1(t1, t2, ratio, mode, bifurcated)
