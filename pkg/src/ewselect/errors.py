"""Exception types shared across the package."""


class EwselectError(Exception):
    """Base class for all package errors."""


class NonFiniteError(EwselectError, ValueError):
    """Raised when an input array contains NaN or infinite entries."""


class DomainError(EwselectError, ValueError):
    """Raised when an argument is outside its mathematical domain."""


class TooLargeError(EwselectError, ValueError):
    """Raised when an exhaustive subset computation would exceed the cap."""


class NotConvergedError(EwselectError, RuntimeError):
    """Raised when an iterative solver stops before reaching its tolerance.

    Carries the final duality gap and iteration count when available.
    """

    def __init__(self, message, gap=None, iterations=None):
        super().__init__(message)
        self.gap = gap
        self.iterations = iterations


class SingularError(EwselectError, ValueError):
    """Raised when a matrix that must be invertible is rank-deficient."""
