"""Exception hierarchy shared by all modules."""


class SmartQubitError(Exception):
    """Base class for errors raised by :mod:`smartqubit`."""


class DomainError(SmartQubitError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigurationError(SmartQubitError, ValueError):
    """Inconsistent or incomplete model/scenario configuration."""


class EvaluationError(SmartQubitError, ArithmeticError):
    """A waveform or Hamiltonian produced a non-finite value."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class OptimizationError(SmartQubitError, RuntimeError):
    """The pulse optimizer failed to reach its fidelity target.

    The best point found is kept on ``best`` together with its fidelity.
    """

    def __init__(self, message, best=None, fidelity=None):
        super().__init__(message)
        self.best = best
        self.fidelity = fidelity


class TruncationWarning(RuntimeWarning):
    """Gaussian weight is dominated by the finite extent of a noise grid."""
