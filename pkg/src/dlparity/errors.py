"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(OverflowError):
    """A request exceeds the supported native integer width."""


class CapacityError(MemoryError):
    """A dense construction was requested above the configured size limit."""


class ConfigError(ValueError):
    """An experiment configuration is empty or inconsistent."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance.

    The last iterate and residual are kept so callers can inspect how far
    the solver got.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class VerificationError(AssertionError):
    """A numerical identity failed to hold within its tolerance."""

    def __init__(self, message, max_deviation=None):
        super().__init__(message)
        self.max_deviation = max_deviation
