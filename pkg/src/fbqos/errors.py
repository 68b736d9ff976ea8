"""Exception hierarchy shared by every module of the package."""


class FbqosError(Exception):
    """Base class for all package errors."""


class DomainError(FbqosError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class NumericRangeError(FbqosError, ArithmeticError):
    """A log-domain quantity left the representable floating-point range."""

    def __init__(self, message, magnitude=None):
        super().__init__(message)
        self.magnitude = magnitude


class InfeasibleTargetError(FbqosError):
    """A root-finding target cannot be bracketed inside the admissible range."""


class InvalidMatrixError(FbqosError):
    """The eigen-solver could not handle a channel matrix."""


class DegenerateEstimateError(FbqosError):
    """A Monte Carlo estimate has no finite sample to work with."""


class MonteCarloError(FbqosError):
    """A functional failed on one realization; ``index`` allows replaying it."""

    def __init__(self, message, index):
        super().__init__(f"{message} (realization index {index})")
        self.index = index


class ConfigError(FbqosError):
    """Invalid experiment configuration."""
