"""Exception hierarchy shared by every module in the package."""


class HamupError(Exception):
    """Base class for all package errors."""


class ShapeError(HamupError, ValueError):
    """Operands have incompatible dimensions."""


class InvalidParameterError(HamupError, ValueError):
    """A scalar argument is outside its admissible range."""


class ConfigurationError(HamupError, ValueError):
    """An ensemble, noise model or run configuration is unsupported or infeasible."""


class InfeasibleNoiseError(ConfigurationError):
    """Declared noise budget leaves no room for progress at the requested accuracy."""


class ResourceLimitError(HamupError, RuntimeError):
    """A dense path was requested above the configured dimension cap."""


class NumericalBreakdownError(HamupError, ArithmeticError):
    """A quantity that must be positive came out nonpositive (truncation too short, bad norm bound)."""
