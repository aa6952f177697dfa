"""Exception hierarchy shared by all modules."""


class UntangleError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(UntangleError, ValueError):
    pass


class InvalidParameters(UntangleError, ValueError):
    pass


class IntegrationDiverged(UntangleError, ArithmeticError):
    pass


class ChartInconsistency(UntangleError):
    pass


class ConvergenceError(UntangleError):
    pass


class PlanningFailed(UntangleError):
    pass


class RelocationFailed(UntangleError):
    """Post-verification of a relocation found a set outside its target."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ShapeError(UntangleError, ValueError):
    pass


class DocumentError(UntangleError, ValueError):
    pass
