"""Exception types shared across the package."""


class RelupatchError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(RelupatchError):
    """Input vector or matrix shape is inconsistent with the model."""


class OnBoundaryError(RelupatchError):
    """A pre-activation is zero within tolerance; the gradient is undefined."""


class OutOfDomainError(RelupatchError):
    """Query point lies outside the oracle's domain ball."""


class RejectionBudgetError(RelupatchError):
    """Too many candidate probe points were rejected."""


class DegeneratePairError(RelupatchError):
    """Hyperplane normals are colinear; the intersection is not (n-2)-dimensional."""


class OverlapError(RelupatchError):
    """Closed-form Hessian requested for patches whose supports overlap."""


class DuplicatePointError(RelupatchError):
    """Two probe points coincide, so no positive disjoint radius exists."""


class DivergenceError(RelupatchError):
    """Gradient descent objective grew for too many consecutive iterations."""


class SingularSystemError(RelupatchError):
    """Normal equations are singular and no ridge term was supplied."""


class SchemaError(RelupatchError):
    """A serialized document does not match the expected file schema."""
