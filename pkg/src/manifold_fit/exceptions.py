"""Exception types raised across the package."""


class ManifoldFitError(Exception):
    """Base class for all package errors."""


class DegenerateDirection(ManifoldFitError, ValueError):
    """A direction vector has zero (or numerically zero) length."""


class InvalidMatrix(ManifoldFitError, ValueError):
    pass


class AmbiguousProjection(ManifoldFitError, ValueError):
    """The query point sits on a medial-axis locus of the manifold."""


class RejectionBudgetExceeded(ManifoldFitError, RuntimeError):
    pass


class EmptyInput(ManifoldFitError, ValueError):
    pass


class EmptyNeighborhood(ManifoldFitError, ValueError):
    """No sample carries positive weight in the spherical neighborhood."""


class EmptyCylinder(ManifoldFitError, ValueError):
    """Too few samples carry positive weight in the cylindrical neighborhood."""


class InsufficientNeighbors(ManifoldFitError, ValueError):
    pass


class NotConverged(ManifoldFitError, RuntimeError):
    """Iterative projection stopped before reaching tolerance.

    The last iterate is available as ``point``.
    """

    def __init__(self, message, point=None, n_iter=None):
        super().__init__(message)
        self.point = point
        self.n_iter = n_iter


class AllExcluded(ManifoldFitError, ValueError):
    pass


class NonPositiveInput(ManifoldFitError, ValueError):
    pass


class ConfigError(ManifoldFitError, ValueError):
    pass
