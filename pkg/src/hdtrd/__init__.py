"""Relevant-difference testing for high-dimensional linear regression,
covariance spectrum estimation, and transferability detection."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    DegenerateDataError,
    EstimationError,
    HdtrdError,
    InfeasibleError,
    InputError,
)

__all__ = [
    "ConvergenceError",
    "DegenerateDataError",
    "EstimationError",
    "HdtrdError",
    "InfeasibleError",
    "InputError",
    "__version__",
]
