"""Exception types raised across the package."""


class EPRGhostError(Exception):
    """Base class for all package errors."""


class DomainError(EPRGhostError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SpecialFunctionRangeError(EPRGhostError, ArithmeticError):
    """A special-function value is not representable in double precision."""


class EvaluationError(EPRGhostError, ArithmeticError):
    """A model produced a non-finite value.

    ``term`` names the offending subterm and ``index`` the scan position,
    when known.
    """

    def __init__(self, message, term=None, index=None):
        super().__init__(message)
        self.term = term
        self.index = index


class ConvergenceError(EPRGhostError, RuntimeError):
    """A quadrature ran out of budget before reaching its tolerance."""

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class DataError(EPRGhostError, ValueError):
    """Malformed or physically invalid measurement data."""

    def __init__(self, message, index=None, line=None):
        super().__init__(message)
        self.index = index
        self.line = line


class ConfigError(EPRGhostError, ValueError):
    """Invalid run configuration. ``field`` or ``rule`` name the failure."""

    def __init__(self, message, field=None, rule=None):
        super().__init__(message)
        self.field = field
        self.rule = rule


class FitError(EPRGhostError, RuntimeError):
    """A fit result cannot be used for the requested operation."""
