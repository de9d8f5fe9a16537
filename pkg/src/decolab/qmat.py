"""Dense 2x2 / 4x4 complex matrix helpers.

Operators on the qubit are plain ``(2, 2)`` complex arrays in the energy
eigenbasis; Liouville vectors are ``(4,)`` arrays ordered
``(rho11, rho12, rho21, rho22)`` (row-major flattening), and superoperators
are ``(4, 4)`` arrays acting on them.
"""
import numpy as np

from . import _kernels
from .config import DEFAULT_TOLERANCES
from .errors import ConvergenceError, RankDeficientError, ValidationError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def as_cmat2(m, name="matrix"):
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValidationError(f"{name} must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def is_hermitian(m, tol=DEFAULT_TOLERANCES.hermitian):
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def require_hermitian(m, name="matrix", tol=DEFAULT_TOLERANCES):
    m = as_cmat2(m, name)
    if not is_hermitian(m, tol.hermitian):
        raise ValidationError(f"{name} is not Hermitian within {tol.hermitian:g}")
    return m


def vectorize(m):
    """2x2 operator -> Liouville vector (rho11, rho12, rho21, rho22)."""
    return np.asarray(m, dtype=complex).reshape(4).copy()


def devectorize(v):
    return np.asarray(v, dtype=complex).reshape(2, 2).copy()


def eig_hermitian(m, tol=DEFAULT_TOLERANCES):
    """Closed-form eigendecomposition of a Hermitian 2x2 matrix.

    Returns
    -------
    w : ndarray, shape (2,)
        Eigenvalues in ascending order.
    u : ndarray, shape (2, 2)
        Unitary matrix whose columns are the matching eigenvectors.
    """
    m = require_hermitian(m, tol=tol)
    return _kernels.eigh2(np.ascontiguousarray(m))


def density_eig(rho, tol=DEFAULT_TOLERANCES):
    """Eigendecomposition of a density matrix, enforcing the rank floor."""
    p, u = eig_hermitian(rho, tol)
    if p[0] < tol.rank_floor:
        raise RankDeficientError(
            f"density matrix eigenvalue {p[0]:.3e} below rank floor {tol.rank_floor:g}",
            min_eigenvalue=float(p[0]))
    return p, u


def matrix_power(rho, lam, tol=DEFAULT_TOLERANCES):
    """rho**lam for a full-rank density matrix via its eigenbasis."""
    p, u = density_eig(rho, tol)
    return (u * p ** lam) @ u.conj().T


def matrix_log(rho, tol=DEFAULT_TOLERANCES):
    p, u = density_eig(rho, tol)
    return (u * np.log(p)) @ u.conj().T


def eig_general(mat, tol=DEFAULT_TOLERANCES):
    """Eigenvalues and right eigenvectors of a general 4x4 matrix.

    Eigenvalues are sorted by real part, descending (ties broken by
    imaginary part, descending). Each pair is checked against
    ``||L v - lam v|| <= tol.eig_residual * ||L||``.
    """
    mat = np.asarray(mat, dtype=complex)
    if not np.all(np.isfinite(mat)):
        raise ValidationError("matrix has non-finite entries")
    try:
        w, v = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    order = np.lexsort((-w.imag, -w.real))
    w, v = w[order], v[:, order]
    scale = max(np.linalg.norm(mat, 2), 1.0)
    resid = np.linalg.norm(mat @ v - v * w, axis=0)
    if np.any(resid > tol.eig_residual * scale):
        raise ConvergenceError(f"eigenpair residual {resid.max():.3e} exceeds tolerance")
    return w, v


def trace_norm(m):
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (m + np.conj(m).T)))))


def random_density_matrix(rng, min_eig=1e-3):
    """Full-rank qubit state, Bloch vector uniform in a ball of radius 1 - 2*min_eig."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    radius = (1.0 - 2.0 * min_eig) * rng.uniform() ** (1 / 3)
    v = radius * direction
    return 0.5 * (IDENTITY + v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z)


def bloch_vector(rho):
    rho = np.asarray(rho)
    return np.array([2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def from_bloch(v):
    return _kernels.bloch_to_rho(np.asarray(v, dtype=float))
