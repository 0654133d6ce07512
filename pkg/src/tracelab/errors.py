"""Exception types shared across the package."""


class TraceLabError(Exception):
    """Base class for all tracelab rejections."""


class BuildError(TraceLabError):
    """A builder was asked for something outside its validity range."""


class KindMismatchError(TraceLabError):
    """A norm kind was applied to a graph it is not defined on."""


class ConsistencyError(TraceLabError):
    """Multi-level trace data violates the nesting consistency condition."""


class SolverError(TraceLabError):
    """An iterative or sparse solve failed to reach its residual target."""
