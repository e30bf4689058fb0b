"""Exception types shared across the library."""


class RatioConvexityError(Exception):
    """Base class for every error raised by this package."""


class UsageError(RatioConvexityError):
    """The caller violated a documented precondition (shapes, ranges, flags)."""


class ModelContractError(RatioConvexityError):
    """A density evaluator broke its contract, e.g. returned NaN or +inf."""


class DegenerateSampleError(RatioConvexityError):
    """The sample has no usable spread (zero variance or singular covariance)."""


class InconclusiveScanError(RatioConvexityError):
    """A grid-expansion scan exhausted its rounds without finding a violation."""


class RankDeficientDesignError(UsageError):
    """A least-squares design lost column rank; the message names the dead monomials."""
