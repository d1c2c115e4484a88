"""Exception hierarchy shared by all modules.

``ConfigurationError`` and ``DomainError`` describe bad inputs (CLI exit 2);
everything deriving from ``NumericError`` is a numerical or consistency
failure at run time (CLI exit 3).
"""


class ConfigurationError(ValueError):
    """Invalid model or run configuration."""


class DomainError(ValueError):
    """Argument outside the domain where a formula is defined."""


class NumericError(RuntimeError):
    """Base class for run-time numerical failures."""


class ConvergenceError(NumericError):
    pass


class TruncationError(NumericError):
    """Lattice window too small for the requested accuracy."""


class StabilityError(NumericError):
    """Explicit step size violates the stability contract."""


class UndefinedRateError(NumericError):
    """Growth rate cannot be fitted (zeros or underflow in the fit window)."""


class ConsistencyError(NumericError):
    """Internal cross-check failed; indicates an implementation bug."""
