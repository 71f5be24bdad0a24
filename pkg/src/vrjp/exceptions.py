"""Exception types raised across the package."""


class VRJPError(Exception):
    """Base class for all package errors."""


class ConvergenceError(VRJPError, ArithmeticError):
    """An iterative numerical routine failed to converge.

    ``estimates`` holds the last values produced by the routine so the caller
    can inspect how far off it was (quadrature: last two orders; fixed point:
    the bracketing interval).
    """

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class CancellationError(VRJPError, ArithmeticError):
    """Catastrophic cancellation produced a clearly negative probability."""


class SubcriticalError(VRJPError, ValueError):
    """The good-vertex cluster has mean offspring ``m <= 1``."""


class MalformedConfigError(VRJPError, ValueError):
    """A run or campaign configuration is inconsistent."""


class CensoredTrajectoryError(VRJPError, ValueError):
    """An analysis that needs an uncensored trajectory received a censored one."""


class InsufficientDataError(VRJPError, ValueError):
    """Too few runs, cuts or blocks for the requested statistic."""


class MalformedInputError(VRJPError, ValueError):
    """Analysis input is structurally invalid (e.g. non-positive total time)."""


class InsufficientBlocksWarning(UserWarning):
    """Fewer than two cuts: no regeneration block could be formed."""
