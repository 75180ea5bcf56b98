"""Exception types shared across the package."""


class FinslerError(Exception):
    """Base class for all finslerlab errors."""


class DomainError(FinslerError):
    """Evaluation outside a function's domain (sqrt/log of nonpositive value, division by zero, point outside chart)."""


class OrderExceeded(FinslerError):
    """A derivative of higher order than the configured truncation order was requested."""


class NotPositiveDefinite(FinslerError):
    """The fundamental tensor failed a positive-definiteness check; the metric is not strongly convex there."""


class DegenerateFrame(FinslerError):
    """Gram-Schmidt pivot collapsed; the fiber direction is too close to the span of the kept coordinate directions."""


class StructureInconsistent(FinslerError):
    """The solved connection violates the structure equations beyond tolerance; indicates a pipeline bug."""


class DimensionError(FinslerError):
    """Operation requires a specific base dimension (e.g. surface-only identities)."""


class BasicViolation(FinslerError):
    """A conformal factor was expected to depend on base coordinates only but has fiber dependence."""
