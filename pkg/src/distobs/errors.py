"""Exception hierarchy shared by all modules."""


class DistObsError(Exception):
    """Base class for package errors."""


class DimensionError(DistObsError, ValueError):
    """Raised when matrix or vector shapes do not conform."""


class NumericalError(DistObsError, ArithmeticError):
    """Raised when a numerical routine fails or loses too much accuracy."""


class AssumptionError(DistObsError):
    """Raised when inputs are valid but a standing assumption does not hold.

    The typical case is a communication graph without a spanning tree rooted
    at the leader, which leaves ``delta_H <= 0``.
    """


class DivergenceError(DistObsError):
    """Raised when a simulated state leaves the finite range."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class ConfigError(DistObsError):
    """Raised on a malformed or schema-violating scenario file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
