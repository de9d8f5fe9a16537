"""Qubit relaxation and decoherence near equilibrium under a nonlinear thermodynamic master equation."""
from .config import DEFAULT_TOLERANCES, Tolerances
from .dynamics import NtmeControls, Trajectory, decay_fit, evolve_linear, evolve_ntme
from .errors import (ConvergenceError, DecolabError, NotBifurcatedError, RankDeficientError,
                     StepSizeUnderflowError, ValidationError)
from .generators import (generator, kubo_mori, kubo_mori_linearization, ldme_generator,
                         linearize_numerically, linearized_generator, ntme_rhs)
from .model import SystemParams, build_operators, gibbs_state
from .response import (Spectrum, lineshape_classify, susceptibility_dd, susceptibility_fdt,
                       susceptibility_time)
from .spectral import (bifurcation_scan, coherence_evolution, critical_angle, rates,
                       t2t1_ratio, threshold)

__version__ = "0.1.0"
