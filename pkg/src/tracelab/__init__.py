"""tracelab: half-order Sobolev seminorms on metric graphs, traces and
extensions between the plane and embedded graph families, and renormalized
energies on the Sierpinski gasket and carpet."""

__version__ = "0.1.0"

from .errors import BuildError, ConsistencyError, KindMismatchError, SolverError, TraceLabError
from .functions import EdgeFunction, FunctionFamily, PlaneField, sample_on_graph, sample_plane, trace_plane_to_graph
from .graphs import Edge, GraphFamily, Junction, MetricGraph, Window, build_graph, restrict_graph
from .seminorms import NormKind, NormReport, edge_double_integral, junction_integral, seminorm

__all__ = [
    "BuildError",
    "ConsistencyError",
    "KindMismatchError",
    "SolverError",
    "TraceLabError",
    "Edge",
    "EdgeFunction",
    "FunctionFamily",
    "GraphFamily",
    "Junction",
    "MetricGraph",
    "NormKind",
    "NormReport",
    "PlaneField",
    "Window",
    "build_graph",
    "edge_double_integral",
    "junction_integral",
    "restrict_graph",
    "sample_on_graph",
    "sample_plane",
    "seminorm",
    "trace_plane_to_graph",
]
