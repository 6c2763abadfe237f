"""Exception and warning types raised across the package."""


class PerpetuaError(Exception):
    """Base class for all package errors."""


class InvalidInput(PerpetuaError, ValueError):
    pass


class DimensionError(PerpetuaError, ValueError):
    pass


class FrameError(PerpetuaError, ValueError):
    pass


class ConfigError(PerpetuaError, ValueError):
    pass


class DegeneracyError(PerpetuaError, ArithmeticError):
    """Raised when a multiplicity or polynomial degree cannot be resolved numerically.

    ``candidates`` holds the competing answers so callers can report both.
    """

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class ConditioningError(PerpetuaError, ArithmeticError):
    pass


class BoundaryWarning(UserWarning):
    """A spectral radius sits within rounding distance of 1."""
