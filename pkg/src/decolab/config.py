"""Shared numerical tolerances.

All tolerance constants live in :class:`Tolerances`. Functions take an
optional ``tol`` argument; override a field with ``dataclasses.replace``::

    tol = replace(DEFAULT_TOLERANCES, rank_floor=1e-14)
"""
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12        # entrywise |M - M^dag|
    rank_floor: float = 1e-12       # smallest admissible density-matrix eigenvalue
    lambda_series: float = 1e-8     # |ln r| below which the lambda-integral uses its series
    omega_switch: float = 1e-7      # |Omega|/Delta below which confluent forms are used
    regime: float = 1e-12           # |z - Delta|/Delta treated as degenerate
    eig_residual: float = 1e-9      # ||L v - lam v|| / ||L|| accepted from the eigensolver
    fd_step: float = 1e-5           # central-difference step of the numerical linearizer
    rtol: float = 1e-9              # adaptive integrator
    atol: float = 1e-12
    free_energy: float = 1e-9       # allowed per-step free-energy rise, relative to |F(0)|
    defective_cond: float = 1e8     # eigenvector condition number triggering expm fallback
    resolvent_cond: float = 1e13    # condition number flagging a singular resolvent sample

    def as_dict(self):
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
