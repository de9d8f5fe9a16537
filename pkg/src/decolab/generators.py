"""Evolution generators: Lindblad-Davies, nonlinear NTME and its linearizations.

Liouville generators are ``(4, 4)`` complex arrays acting on vectors
``(rho11, rho12, rho21, rho22)``.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .config import DEFAULT_TOLERANCES
from .errors import RankDeficientError, ValidationError
from .model import build_operators, gibbs_populations, gibbs_state, kernel_operands, spectral_function
from .qmat import as_cmat2, density_eig, devectorize, require_hermitian, vectorize

REGIMES = ("zero-dephasing", "large-dephasing")

_BASIS = [np.zeros((2, 2), dtype=complex) for _ in range(4)]
for _k in range(4):
    _BASIS[_k].reshape(4)[_k] = 1.0


class UnphysicalParameterWarning(UserWarning):
    """Parameter set leaves the domain where the model's rates are positive."""


def superoperator(func):
    """Matrix of a linear map on 2x2 operators in the Liouville basis."""
    return np.column_stack([vectorize(func(e)) for e in _BASIS])


def commutator_superop(h):
    """-i[H, .]"""
    return superoperator(lambda r: -1j * (h @ r - r @ h))


def ldme_generator(p):
    """Lindblad-Davies generator with jump operators A_w and rates h(w)."""
    ops = build_operators(p)
    h = spectral_function(p)

    def apply(rho):
        out = -1j * (ops.hamiltonian @ rho - rho @ ops.hamiltonian)
        for w, a in ops.bohr.items():
            ad = a.conj().T
            ada = ad @ a
            out = out + h.values[w] * (a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada))
        return out

    return superoperator(apply)


def lambda_integral(rho, x, c, tol=DEFAULT_TOLERANCES):
    """int_0^1 dlam e^{-lam c} rho^lam X rho^(1-lam), evaluated in the eigenbasis of rho."""
    p, u = density_eig(rho, tol)
    return _kernels.lambda_integral_eig(p, u, np.ascontiguousarray(as_cmat2(x, "X")), float(c),
                                        tol.lambda_series)


def lambda_identity_check(rho, a_omega, omega, p, tol=DEFAULT_TOLERANCES, sign=-1.0):
    """Residual of  int e^{-lam beta w} rho^lam [A_w, S(rho) - beta H] rho^(1-lam) = sign (A_w rho - e^{-beta w} rho A_w).

    With S = -ln rho the integral equals e^{-beta w} rho A_w - A_w rho, so the
    default ``sign=-1`` is the form under which the entropic dissipator
    reproduces the Lindblad-Davies one. Returns the max-abs entry of LHS - RHS.
    """
    rho = require_hermitian(rho, "rho", tol)
    pe, u = density_eig(rho, tol)
    beta = p.beta_phys
    ham = build_operators(p).hamiltonian
    s = -(u * np.log(pe)) @ u.conj().T
    g = s - beta * ham
    x = a_omega @ g - g @ a_omega
    lhs = _kernels.lambda_integral_eig(pe, u, np.ascontiguousarray(x), beta * omega, tol.lambda_series)
    rhs = sign * (a_omega @ rho - np.exp(-beta * omega) * rho @ a_omega)
    return float(np.max(np.abs(lhs - rhs)))


class _RhsEvaluator:
    """Binds the kernel operands of one parameter set."""

    def __init__(self, p, tol=DEFAULT_TOLERANCES):
        self.p = p
        self.tol = tol
        self.energies, self.bohr, self.omegas, self.rates = kernel_operands(p)

    def __call__(self, rho):
        rho = np.ascontiguousarray(rho, dtype=complex)
        out = np.empty((2, 2), dtype=complex)
        status = _kernels.ntme_rhs_into(rho, self.energies, self.bohr, self.omegas, self.rates,
                                        self.p.beta_phys, self.tol.rank_floor,
                                        self.tol.lambda_series, out)
        if status != _kernels.OK:
            w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
            raise RankDeficientError(
                f"state eigenvalue {w[0]:.3e} below rank floor {self.tol.rank_floor:g}",
                min_eigenvalue=float(w[0]))
        return out


def ntme_rhs(rho, p, tol=DEFAULT_TOLERANCES):
    """Right-hand side of the nonlinear thermodynamic master equation.

    Sums all nine (w, w') pairs of Bohr frequencies, cross terms included.
    """
    rho = require_hermitian(rho, "rho", tol)
    return _RhsEvaluator(p, tol)(rho)


def _coherence_rate(p):
    gamma1_half = 0.5 * (1.0 + np.exp(p.beta)) * p.a_delta
    sign = -1.0 if p.convention == "subtractive" else 1.0
    return gamma1_half + sign * p.gamma2_star


def linear_coefficients(p):
    """The three real parameters (x, y, z) of the analytic generator."""
    x = p.a_delta
    y = _coherence_rate(p)
    half = 0.5 * p.beta
    z = half * np.exp(half) / np.tanh(half) * p.a_delta
    return x, y, z


def linearized_generator(p, regime=None, z_coupling=True):
    """Analytic linearized generator with populations decoupled from coherences.

    Parameters
    ----------
    regime : {"zero-dephasing", "large-dephasing"} or None
        Inferred from ``p.gamma2_star`` when omitted. Asking for
        ``"zero-dephasing"`` with nonzero dephasing is an error.
    z_coupling : bool
        ``False`` drops the coherence cross-coupling z, which leaves the
        Lindblad-Davies structure.
    """
    if regime is None:
        regime = "zero-dephasing" if p.gamma2_star == 0 else "large-dephasing"
    if regime not in REGIMES:
        raise ValidationError(f"regime must be one of {REGIMES}")
    if regime == "zero-dephasing" and p.gamma2_star != 0:
        raise ValidationError("zero-dephasing regime requested but a0*dq > 0")
    x, y, z = linear_coefficients(p)
    if y < 0:
        warnings.warn(f"coherence rate y = {y:.6g} < 0: outside the model's stated domain",
                      UnphysicalParameterWarning, stacklevel=2)
    if not z_coupling:
        z = 0.0
    eb = np.exp(p.beta)
    e2 = np.exp(2j * p.theta)
    d = p.delta
    return np.array([
        [-x, 0, 0, x * eb],
        [0, -y + 1j * d, z * e2, 0],
        [0, z * np.conj(e2), -y - 1j * d, 0],
        [x, 0, 0, -x * eb],
    ], dtype=complex)


def linearize_numerically(p, step=None, tol=DEFAULT_TOLERANCES):
    """Central-difference Jacobian of the NTME at the Gibbs state.

    Differentiates along the traceless Hermitian directions sigma_z, sigma_x,
    sigma_y; the trace direction is fixed by L(pi) = 0 (the right-hand side is
    homogeneous of degree one in rho).
    """
    h = tol.fd_step if step is None else step
    pi = gibbs_state(p)
    p1, p2 = gibbs_populations(p.beta)
    if p2 < tol.rank_floor:
        raise RankDeficientError("Gibbs state below rank floor", min_eigenvalue=float(p2))
    rhs = _RhsEvaluator(p, tol)

    def jac(direction):
        return (rhs(pi + h * direction) - rhs(pi - h * direction)) / (2 * h)

    jz = jac(np.diag([1.0, -1.0]).astype(complex))
    jx = jac(np.array([[0, 1], [1, 0]], dtype=complex))
    jy = jac(np.array([[0, -1j], [1j, 0]], dtype=complex))
    gen = np.empty((4, 4), dtype=complex)
    # |1><1| = pi + p2 sz,  |2><2| = pi - p1 sz,  |1><2| = (sx + i sy)/2
    gen[:, 0] = vectorize(p2 * jz)
    gen[:, 3] = vectorize(-p1 * jz)
    gen[:, 1] = vectorize(0.5 * (jx + 1j * jy))
    gen[:, 2] = vectorize(0.5 * (jx - 1j * jy))
    return gen


@dataclass(frozen=True)
class KuboMori:
    """Equilibrium Kubo-Mori map K A = int_0^1 pi^lam A pi^(1-lam) dlam and its inverse."""
    state: np.ndarray
    forward: np.ndarray
    inverse: np.ndarray

    @property
    def diagonal(self):
        return np.real(np.diag(self.forward))

    def apply(self, a):
        return devectorize(self.forward @ vectorize(a))

    def apply_inverse(self, a):
        return devectorize(self.inverse @ vectorize(a))


def _kubo_factors(pops):
    k = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            if i == j or pops[i] == pops[j]:
                k[i, j] = pops[j]
            else:
                k[i, j] = (pops[i] - pops[j]) / np.log(pops[i] / pops[j])
    return k


def kubo_mori(p):
    """Kubo-Mori superoperator at the Gibbs state (diagonal in the Liouville basis).

    Off-diagonal factors are written via tanh so they stay accurate at large beta:
    (p1 - p2)/ln(p1/p2) = tanh(beta/2)/beta.
    """
    pops = gibbs_populations(p.beta)
    k = _kubo_factors(pops)
    coh = np.tanh(0.5 * p.beta) / p.beta
    k[0, 1] = k[1, 0] = coh
    fwd = np.diag(k.reshape(4)).astype(complex)
    inv = np.diag(1.0 / k.reshape(4)).astype(complex)
    return KuboMori(gibbs_state(p), fwd, inv)


def kubo_mori_linearization(p, tol=DEFAULT_TOLERANCES):
    """Exact linearization of the NTME at equilibrium, assembled in closed form.

    L drho = -i[H, drho] - 1/2 sum sqrt(h h') [A_w^dag, K_c [A_w', K^{-1} drho]]
    with K_c X = int e^{-lam c} pi^lam X pi^(1-lam), c = beta (w + w')/2.
    This keeps the population-coherence couplings the analytic form drops.
    """
    ops = build_operators(p)
    h = spectral_function(p)
    pops = gibbs_populations(p.beta)
    beta = p.beta_phys
    km = kubo_mori(p)
    lp = np.log(pops)

    def kc(x, c):
        out = np.empty((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out[i, j] = x[i, j] * _kernels.kubo_weight(c, lp[i], lp[j], pops[j], tol.lambda_series)
        return out

    pairs = ops.bohr.items()

    def apply(drho):
        out = -1j * (ops.hamiltonian @ drho - drho @ ops.hamiltonian)
        g = -km.apply_inverse(drho)
        for wb, ab in pairs:
            x = ab @ g - g @ ab
            for wa, aa in pairs:
                w = np.sqrt(h.values[wa] * h.values[wb])
                if w == 0:
                    continue
                y = kc(x, 0.5 * beta * (wa + wb))
                ad = aa.conj().T
                out = out + 0.5 * w * (ad @ y - y @ ad)
        return out

    return superoperator(apply)


def generator(p, kind="analytic"):
    """Look up a generator by name: analytic, kubo-mori, numerical, ldme."""
    if kind == "analytic":
        return linearized_generator(p)
    if kind == "kubo-mori":
        return kubo_mori_linearization(p)
    if kind == "numerical":
        return linearize_numerically(p)
    if kind == "ldme":
        return ldme_generator(p)
    raise ValidationError(f"unknown generator kind {kind!r}")
