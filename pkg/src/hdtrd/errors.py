"""Exception hierarchy shared across the toolkit."""


class HdtrdError(Exception):
    """Base class for all toolkit errors."""


class InputError(HdtrdError, ValueError):
    """Invalid or inconsistent user-supplied data or configuration."""


class ConvergenceError(HdtrdError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    Carries the last iterate so callers can inspect or salvage it.
    """

    def __init__(self, message, last_fit=None):
        super().__init__(message)
        self.last_fit = last_fit


class InfeasibleError(HdtrdError):
    """A constrained problem has no feasible point."""


class DegenerateDataError(HdtrdError):
    """Data carries no usable signal for the requested statistic
    (for example all projected residuals are exactly zero)."""


class EstimationError(HdtrdError):
    """A statistical estimation step failed irrecoverably."""
