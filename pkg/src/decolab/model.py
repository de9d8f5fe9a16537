"""Physical parameters and operators of the qubit-bath model.

The energy eigenbasis is ordered ground state first: ``|1>`` has energy
``-Delta/2`` and ``|2>`` has ``+Delta/2``, so the Gibbs state puts the
larger population in ``rho11``.
"""
from dataclasses import dataclass, field, fields, asdict
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import ValidationError

CONVENTIONS = ("subtractive", "additive")


@dataclass(frozen=True)
class SystemParams:
    """Inputs of the single-qubit model.

    Parameters
    ----------
    beta : float
        Dimensionless inverse temperature ``beta * Delta``.
    a_delta : float
        Absorption rate a(Delta) in energy units.
    a0 : float or None
        Zero-frequency rate a(0) in energy units. ``None`` means "same as
        ``a_delta``"; this is recorded in ``a0_defaulted``.
    dq : float
        Pure-dephasing weight ``|Q11 - Q22|**2``.
    delta : float
        Energy gap; sets the unit of energy.
    theta, psi : float
        Phases of the coupling operator and of the dipole.
    mu : float
        Dipole magnitude.
    convention : {"subtractive", "additive"}
        Sign with which pure dephasing enters the coherence rate ``y`` of
        the analytic linearized generator. ``"subtractive"`` gives
        ``y = (1 + e^beta) a/2 - Gamma2*``; ``"additive"`` uses ``+Gamma2*``,
        which is what linearizing the full nonlinear equation produces.
    """
    beta: float
    a_delta: float
    a0: float | None = None
    dq: float = 0.0
    delta: float = 1.0
    theta: float = 0.0
    mu: float = 1.0
    psi: float = 0.0
    convention: str = "subtractive"
    a0_defaulted: bool = field(default=False, init=False, compare=False)

    def __post_init__(self):
        if self.a0 is None:
            object.__setattr__(self, "a0", self.a_delta)
            object.__setattr__(self, "a0_defaulted", True)
        for name in ("beta", "a_delta", "a0", "dq", "delta", "theta", "mu", "psi"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if self.delta <= 0:
            raise ValidationError("delta must be > 0")
        if self.beta <= 0:
            raise ValidationError("beta must be > 0")
        if self.a_delta < 0 or self.a0 < 0 or self.dq < 0:
            raise ValidationError("a_delta, a0 and dq must be >= 0")
        if self.mu <= 0:
            raise ValidationError("mu must be > 0")
        if self.convention not in CONVENTIONS:
            raise ValidationError(f"convention must be one of {CONVENTIONS}")
        object.__setattr__(self, "theta", float(self.theta) % (2 * np.pi))
        object.__setattr__(self, "psi", float(self.psi) % (2 * np.pi))

    @property
    def beta_phys(self):
        """Physical inverse temperature (1/energy)."""
        return self.beta / self.delta

    @property
    def gamma2_star(self):
        """Pure-dephasing rate a(0) |Q11 - Q22|^2 / 2."""
        return 0.5 * self.a0 * self.dq

    def replace(self, **changes):
        values = {f.name: getattr(self, f.name) for f in fields(self) if f.init}
        if "a_delta" in changes and "a0" not in changes and self.a0_defaulted:
            values["a0"] = None
        values.update(changes)
        return SystemParams(**values)

    def to_dict(self):
        d = asdict(self)
        return d


class SpectralFunction:
    """Bath spectral function on the Bohr frequencies {-Delta, 0, +Delta}.

    KMS: h(+Delta) = e^beta h(-Delta), with h(-Delta) = a(Delta) and h(0) = a(0).
    """

    def __init__(self, params):
        self.delta = params.delta
        self.beta = params.beta
        self.values = {
            -params.delta: params.a_delta,
            0.0: params.a0,
            params.delta: np.exp(params.beta) * params.a_delta,
        }

    def __call__(self, omega):
        for w, h in self.values.items():
            if np.isclose(omega, w, rtol=0, atol=1e-12 * self.delta):
                return h
        raise ValidationError(f"{omega!r} is not a Bohr frequency")

    def kms_ratio(self):
        return self.values[self.delta] / self.values[-self.delta] if self.values[-self.delta] else np.nan


@dataclass(frozen=True)
class BohrDecomposition:
    """Eigenoperators A_w of the coupling: [A_w, H_S] = w A_w."""
    minus: np.ndarray   # w = -Delta
    zero: np.ndarray    # w = 0
    plus: np.ndarray    # w = +Delta
    delta: float

    def items(self):
        return [(-self.delta, self.minus), (0.0, self.zero), (self.delta, self.plus)]

    def total(self):
        return self.minus + self.zero + self.plus


class Operators(NamedTuple):
    hamiltonian: np.ndarray
    coupling: np.ndarray
    bohr: BohrDecomposition
    dipole: np.ndarray


def build_operators(p):
    """H_S, Q, its Bohr decomposition and the dipole operator D.

    Q has off-diagonal entries Q12 = e^{i theta}, Q21 = e^{-i theta} and the
    diagonal ``(+sqrt(dq)/2, -sqrt(dq)/2)`` so that ``|Q11 - Q22|^2 = dq``.
    The dipole is ``mu (e^{i psi} |1><2| + e^{-i psi} |2><1|)``.
    """
    h = np.diag([-0.5 * p.delta, 0.5 * p.delta]).astype(complex)
    s = 0.5 * np.sqrt(p.dq)
    q = np.array([[s, np.exp(1j * p.theta)], [np.exp(-1j * p.theta), -s]], dtype=complex)
    # (A_w)_ij = Q_ij when E_j - E_i = w
    a_minus = np.array([[0, 0], [q[1, 0], 0]], dtype=complex)
    a_zero = np.diag(np.diag(q))
    a_plus = np.array([[0, q[0, 1]], [0, 0]], dtype=complex)
    bohr = BohrDecomposition(a_minus, a_zero, a_plus, p.delta)
    d = p.mu * np.array([[0, np.exp(1j * p.psi)], [np.exp(-1j * p.psi), 0]], dtype=complex)
    return Operators(h, q, bohr, d)


def gibbs_populations(beta):
    return np.array([expit(beta), expit(-beta)])


def gibbs_state(p):
    """Equilibrium state exp(-beta H_S)/Z, diagonal in the energy basis."""
    return np.diag(gibbs_populations(p.beta)).astype(complex)


def spectral_function(p):
    return SpectralFunction(p)


def kernel_operands(p):
    """Arrays consumed by the NTME kernels."""
    ops = build_operators(p)
    h = spectral_function(p)
    energies = np.real(np.diag(ops.hamiltonian)).copy()
    omegas = np.array([w for w, _ in ops.bohr.items()])
    bohr = np.ascontiguousarray(np.array([a for _, a in ops.bohr.items()], dtype=complex))
    rates = np.array([h.values[-p.delta], h.values[0.0], h.values[p.delta]])
    return energies, bohr, omegas, rates
