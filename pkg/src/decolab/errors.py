"""Exception types raised by decolab."""


class DecolabError(Exception):
    """Base class for all library errors."""


class ValidationError(DecolabError, ValueError):
    """Invalid parameters or malformed input."""


class RankDeficientError(DecolabError):
    """A density matrix eigenvalue fell below the rank floor."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NotBifurcatedError(DecolabError):
    """Operation needs the biexponential regime (z > Delta)."""


class StepSizeUnderflowError(DecolabError):
    """Adaptive integrator could not make progress."""

    def __init__(self, message, t=None, h=None):
        super().__init__(message)
        self.t = t
        self.h = h


class ConvergenceError(DecolabError):
    """Eigensolver or fit failed to converge."""
