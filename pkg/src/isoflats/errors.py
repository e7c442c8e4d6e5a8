"""Exception hierarchy shared by every module."""


class IsoflatsError(Exception):
    """Base class for all library errors."""


class SchemaError(IsoflatsError):
    pass


class MetricError(IsoflatsError):
    pass


class ConvexityError(IsoflatsError):
    pass


class UnknownVertex(IsoflatsError):
    pass


class DisconnectedGraph(IsoflatsError):
    pass


class NotNPC(IsoflatsError):
    pass


class NoPathFound(IsoflatsError):
    pass


class DegenerateInput(IsoflatsError):
    pass


class NotClosed(IsoflatsError):
    pass


class Exceeded(IsoflatsError):
    def __init__(self, msg, bound=None):
        super().__init__(msg)
        self.bound = bound


class ArcNotOnBoundary(IsoflatsError):
    pass


class NotReduced(IsoflatsError):
    pass


class DisconnectedRegion(IsoflatsError):
    pass


class PreconditionRuffleFailed(IsoflatsError):
    pass


class BadParams(IsoflatsError):
    pass


class InvariantBreach(IsoflatsError):
    """A theorem-level invariant failed; this always signals a bug."""
