"""Exception types raised across the package."""


class CalabiSlagError(Exception):
    """Base class for all package errors."""


class SeedOffLevelSet(CalabiSlagError):
    pass


class SingularPoint(CalabiSlagError):
    """Tracing reached a point where the gradient (almost) vanishes.

    The partial branch traced so far is kept on ``branch`` and the
    offending location on ``point`` so callers can reseed.
    """

    def __init__(self, message, point=None, branch=None):
        super().__init__(message)
        self.point = point
        self.branch = branch


class TraceFailure(CalabiSlagError):
    pass


class DegenerateBranch(CalabiSlagError):
    pass


class OutOfDomain(CalabiSlagError, ValueError):
    pass


class DegenerateAngle(CalabiSlagError, ValueError):
    pass


class NotKahler(CalabiSlagError, ValueError):
    pass


class NonRealRoot(CalabiSlagError, ValueError):
    pass


class DegenerateP(CalabiSlagError, ValueError):
    pass


class NoRoot(CalabiSlagError):
    pass


class ArityMismatch(CalabiSlagError, ValueError):
    pass


class WallDivision(CalabiSlagError, ZeroDivisionError):
    pass


class OutOfRegime(CalabiSlagError, ValueError):
    pass


class BadInterval(CalabiSlagError, ValueError):
    pass


class StepUnstable(CalabiSlagError):
    pass


class SelfIntersection(CalabiSlagError):
    def __init__(self, message, segments=None):
        super().__init__(message)
        self.segments = segments


class MultipleCriticalPoints(CalabiSlagError):
    pass


class BlowUp(CalabiSlagError):
    """Curvature guard tripped; ``state`` holds the last valid flow state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class BranchEscapesWindow(CalabiSlagError):
    pass
