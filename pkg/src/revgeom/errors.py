"""Exception types raised by the toolkit."""


class RevGeomError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameter(RevGeomError, ValueError):
    pass


class NotProlate(InvalidParameter):
    pass


class OutOfDomain(InvalidParameter):
    pass


class ResolutionError(RevGeomError):
    pass


class ValidationFailure(RevGeomError):
    """A model failed a structural check.

    ``condition`` names the violated property and ``location`` the radius (or
    ``None``) where it was detected.
    """

    def __init__(self, condition, location=None, detail=""):
        self.condition = condition
        self.location = location
        msg = condition
        if location is not None:
            msg += f" at r={location:.12g}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class IntegrationFailure(RevGeomError):
    pass


class SolverFailure(RevGeomError):
    pass


class UnsupportedModel(RevGeomError):
    pass


class NoComparisonTriangle(RevGeomError):
    def __init__(self, message, feasible_range=None):
        self.feasible_range = feasible_range
        super().__init__(message)


class HypothesisViolated(RevGeomError):
    pass
