"""Exception types raised across the package."""


class DvoretzkyFramesError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(DvoretzkyFramesError, ValueError):
    pass


class DimensionMismatchError(InvalidParameterError):
    pass


class ResourceError(DvoretzkyFramesError):
    """Requested computation is too large (e.g. 2^k sign patterns for big k)."""


class DegenerateCloudError(DvoretzkyFramesError):
    """Point cloud does not span the ambient space."""


class ConvergenceError(DvoretzkyFramesError):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class ConditioningError(DvoretzkyFramesError):
    pass


class InfeasibleInstanceError(DvoretzkyFramesError):
    """No odd degree satisfies the dimension budget for (n, k)."""


class CapacityError(DvoretzkyFramesError):
    """A max-element part of a formal sum exceeds n - k."""


class PreconditionError(DvoretzkyFramesError):
    pass


class InvalidFrameError(InvalidParameterError):
    pass
