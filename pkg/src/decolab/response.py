"""Linear response near equilibrium: susceptibilities and lineshape diagnostics.

Convention: chi(nu) = int_0^inf chi(t) e^{-i nu t} dt with
chi(t) = -beta d/dt tr(A e^{L t} K_pi B). The frequency-domain form is then
chi(nu) = +beta A . L (L - i nu)^{-1} K_pi B.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

from .config import DEFAULT_TOLERANCES
from .errors import ValidationError
from .generators import generator as make_generator, kubo_mori
from .model import build_operators, gibbs_state
from .qmat import eig_general, require_hermitian, vectorize
from .spectral import rates

LINESHAPE_THRESHOLD = 0.05


@dataclass
class Spectrum:
    nu: np.ndarray
    chi: np.ndarray
    flags: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.chi = np.asarray(self.chi, dtype=complex)
        if self.nu.shape != self.chi.shape:
            raise ValidationError("nu and chi must have the same shape")
        if self.flags is None:
            self.flags = np.zeros(self.nu.shape, dtype=bool)

    def __len__(self):
        return len(self.nu)


def default_grid(p, n=2001):
    """Symmetric grid over +-10 max(Delta, Re Lambda_plus)."""
    span = 10 * max(p.delta, rates(p).lambda_plus.real)
    return np.linspace(-span, span, n)


def _null_projector(p):
    # L pi = 0 and (1,0,0,1) L = 0; P0 = |pi>><<1|
    return np.outer(vectorize(gibbs_state(p)), np.array([1, 0, 0, 1], dtype=complex))


def susceptibility_fdt(a, b, p, nu, kind="analytic", tol=DEFAULT_TOLERANCES):
    """Resolvent evaluation of beta A . L (L - i nu)^{-1} K_pi B.

    Uses L (L - i nu)^{-1} x = x + i nu (L - i nu)^{-1} x on x = (1 - P0) K_pi B,
    where P0 projects on the stationary mode. The stationary component drops
    out exactly, so nu = 0 needs no solve. Samples whose shifted generator has
    condition number above ``tol.resolvent_cond`` are flagged and set to NaN.
    """
    a = require_hermitian(a, "A", tol)
    b = require_hermitian(b, "B", tol)
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    gen = make_generator(p, kind)
    km = kubo_mori(p)
    x = vectorize(km.apply(b))
    x = x - _null_projector(p) @ x
    av = vectorize(a).conj()
    beta = p.beta_phys

    shifted = gen[None, :, :] - 1j * nu[:, None, None] * np.eye(4)[None, :, :]
    cond = np.linalg.cond(shifted)
    ok = (nu == 0) | (cond <= tol.resolvent_cond)
    chi = np.full(nu.shape, np.nan + 0j)
    chi[nu == 0] = beta * (av @ x)
    idx = np.flatnonzero(ok & (nu != 0))
    if idx.size:
        sol = np.linalg.solve(shifted[idx], np.broadcast_to(x, (idx.size, 4))[..., None])[..., 0]
        chi[idx] = beta * (av @ x + 1j * nu[idx] * (sol @ av))
    meta = {"method": "fdt", "generator": kind, "params": p.to_dict()}
    return Spectrum(nu, chi, ~ok, meta)


def _dd_weights(p):
    rs = rates(p)
    c = np.cos(2 * (p.theta - p.psi))
    return rs, c


def susceptibility_dd(p, nu, tol=DEFAULT_TOLERANCES):
    """Closed-form dipole-dipole susceptibility.

    chi(nu) = (mu^2/Delta) tanh(beta/2) sum_pm (1 -+ (z/Omega) cos 2(theta - psi)) Lambda_pm/(Lambda_pm + i nu).
    Within ``tol.omega_switch`` of the threshold the sum is replaced by its
    limit 2 g(y) - 2 z c g'(y), g(L) = L/(L + i nu).
    """
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    rs, c = _dd_weights(p)
    pref = p.mu ** 2 / p.delta * np.tanh(0.5 * p.beta)
    om = rs.omega
    if abs(om) < tol.omega_switch * p.delta:
        y = rs.y
        g = y / (y + 1j * nu)
        dg = 1j * nu / (y + 1j * nu) ** 2
        total = 2 * g - 2 * rs.z * c * dg
    else:
        lp, lm = rs.lambda_plus, rs.lambda_minus
        zc = rs.z * c / om
        total = (1 - zc) * lp / (lp + 1j * nu) + (1 + zc) * lm / (lm + 1j * nu)
    meta = {"method": "closed", "params": p.to_dict()}
    return Spectrum(nu, pref * total, None, meta)


def susceptibility_time(a, b, p, t, kind="analytic", tol=DEFAULT_TOLERANCES):
    """chi(t) = -beta d/dt tr(A e^{L t} K_pi B), differentiated mode by mode.

    Falls back to L e^{L t} via scaling-and-squaring when the eigenvector
    matrix is ill-conditioned (defective generator at threshold).
    """
    a = require_hermitian(a, "A", tol)
    b = require_hermitian(b, "B", tol)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    gen = make_generator(p, kind)
    x = vectorize(kubo_mori(p).apply(b))
    av = vectorize(a).conj()
    beta = p.beta_phys
    lam, vec = np.linalg.eig(gen)
    if np.linalg.cond(vec) < tol.defective_cond:
        left = av @ vec
        right = np.linalg.solve(vec, x)
        modes = left * right * lam
        out = -beta * (np.exp(np.outer(t, lam)) @ modes)
    else:
        out = np.array([-beta * (av @ gen @ expm(gen * ti) @ x) for ti in t])
    scale = max(1.0, float(np.max(np.abs(out), initial=0)))
    if np.max(np.abs(out.imag), initial=0) > 1e-9 * scale:
        raise ValidationError("chi(t) has an imaginary part; A and B must be Hermitian")
    return out.real


# -- lineshapes ---------------------------------------------------------------

def lorentzian_pair(nu, amp, nu0, gamma):
    return amp * (gamma / ((nu - nu0) ** 2 + gamma ** 2) - gamma / ((nu + nu0) ** 2 + gamma ** 2))


def gaussian_pair(nu, amp, nu0, sigma):
    return amp * (np.exp(-0.5 * ((nu - nu0) / sigma) ** 2) - np.exp(-0.5 * ((nu + nu0) / sigma) ** 2))


@dataclass(frozen=True)
class LineshapeFit:
    model: str
    params: tuple
    residual: float


@dataclass(frozen=True)
class LineshapeResult:
    label: str
    lorentzian: LineshapeFit
    gaussian: LineshapeFit
    threshold: float
    window: tuple


def _half_max_window(nu, y):
    """Contiguous positive-frequency region where y stays above half its peak."""
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    lo = k
    while lo > 0 and y[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < len(y) - 1 and y[hi + 1] >= half:
        hi += 1
    return lo, hi


def _fit(model, name, nu, y, guess, bounds):
    res = least_squares(lambda q: model(nu, *q) - y, guess, bounds=bounds,
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    rel = float(np.linalg.norm(res.fun) / np.linalg.norm(y))
    return LineshapeFit(name, tuple(float(v) for v in res.x), rel)


def lineshape_classify(s, threshold=LINESHAPE_THRESHOLD):
    """Fit Im chi with a Lorentzian pair and a Gaussian pair near its peak.

    Both models are odd in nu, like Im chi. The fit window is the contiguous
    half-maximum region around the positive-frequency peak; residuals are
    ||fit - data|| / ||data|| there. Labels: ``lorentzian-pair`` when the
    Lorentzian fit is within ``threshold``, ``non-lorentzian-central`` when
    both fits miss it, ``mixed`` otherwise.
    """
    pos = s.nu > 0
    if not np.any(pos):
        raise ValidationError("spectrum needs positive frequencies")
    nu = s.nu[pos]
    y = s.chi.imag[pos]
    keep = np.isfinite(y)
    nu, y = nu[keep], y[keep]
    y = y * np.sign(y[np.argmax(np.abs(y))])
    lo, hi = _half_max_window(nu, y)
    nu_w, y_w = nu[lo:hi + 1], y[lo:hi + 1]
    k = int(np.argmax(y_w))
    nu_pk, y_pk = nu_w[k], y_w[k]
    width = max(0.5 * (nu_w[-1] - nu_w[0]), 1e-3 * max(nu_pk, 1.0))
    big = np.inf
    lor = _fit(lorentzian_pair, "lorentzian-pair", nu_w, y_w,
               [y_pk * width, nu_pk, width], ([0, 0, 1e-12], [big, big, big]))
    gau = _fit(gaussian_pair, "gaussian-pair", nu_w, y_w,
               [y_pk, nu_pk, width], ([0, 0, 1e-12], [big, big, big]))
    if lor.residual <= threshold:
        label = "lorentzian-pair"
    elif gau.residual > threshold:
        label = "non-lorentzian-central"
    else:
        label = "mixed"
    return LineshapeResult(label, lor, gau, threshold, (float(nu_w[0]), float(nu_w[-1])))


def dipole(p):
    return build_operators(p).dipole
