"""
Exception hierarchy shared by the spatial prediction modules.

Module-specific errors live next to the code that raises them and derive
from the classes defined here.
"""


class SpatialError(Exception):
    """Base exception for every failure raised by the toolkit."""
    pass


class InsufficientDataError(SpatialError):
    """Raised when an operation receives fewer observations than it needs."""
    pass


class IllConditionedError(SpatialError):
    """Raised when a linear system is too ill-conditioned to solve reliably."""

    def __init__(self, message: str, rcond: float = 0.0):
        super().__init__(message)
        self.rcond = rcond
