"""Exception types shared across the package."""


class BubbleError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BubbleError):
    """Invalid configuration: bad options, insufficient quadrature, failed
    necessary condition, malformed input files."""


class DomainError(BubbleError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(DomainError):
    """Value outside an invertible map's range; carries the valid bounds."""

    def __init__(self, message, lo=None, hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class ConvergenceError(BubbleError):
    """An iteration failed to converge within its budget."""


class SingularOperatorError(BubbleError):
    """Resolvent shift collides with an eigenvalue; carries the mode index."""

    def __init__(self, message, mode):
        super().__init__(message)
        self.mode = mode


class StateInvalidError(BubbleError):
    """A residual state left its validity region; carries the margins."""

    def __init__(self, message, margins=None):
        super().__init__(message)
        self.margins = margins


class NoConvergenceError(ConvergenceError):
    """Newton iteration diverged or stalled; carries the iterate trace
    as a list of (iteration, residual_norm) pairs."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class InconsistencyError(BubbleError):
    """Two routes to the same quantity disagree beyond tolerance,
    typically flagging a too-coarse discretization."""


class GeometryError(BubbleError):
    """Geometry fails injectivity or containment certification."""
