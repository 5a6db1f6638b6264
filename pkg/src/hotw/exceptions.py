"""Exception hierarchy shared across the package."""


class HOTWError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(HOTWError, ValueError):
    pass


class EndpointSingularError(HOTWError):
    """A Cauchy transform was requested exactly at a contour endpoint."""


class ContourTopologyError(HOTWError):
    pass


class NoSolutionError(HOTWError):
    """The collocation system stayed singular after zero-sum repair."""


class UnresolvedError(HOTWError):
    """An adaptive procedure hit its cap before reaching tolerance.

    The best available result is attached as ``best`` together with its
    error estimate, so callers can still inspect or report it.
    """

    def __init__(self, message, best=None, estimate=None):
        super().__init__(message)
        self.best = best
        self.estimate = estimate


class ConsistencyError(HOTWError):
    """Two routes to the same quantity disagreed beyond tolerance."""


class SingularOperatorError(HOTWError):
    pass


class NoConvergenceError(HOTWError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
