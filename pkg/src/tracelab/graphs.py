"""Metric graphs and builders for the graph families used by the experiments.

A metric graph stores plane-embedded vertices, edges with arclength
parameterizations, and junction pairs: ordered pairs of edges meeting at a
vertex, with orientation flags chosen so both traversals start at the shared
point. Infinite families (lines, lattices, pencils) are truncated to a finite
window; every downstream norm is a truncated norm carrying that window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BuildError

_LENGTH_RTOL = 1e-12


@dataclass(frozen=True)
class Window:
    """Axis-aligned square window: |x - cx| <= half_width, |y - cy| <= half_width."""

    half_width: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.half_width > 0:
            raise BuildError(f"window half-width must be positive, got {self.half_width}")

    def contains(self, points: np.ndarray, pad: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cx, cy = self.center
        r = self.half_width + pad
        return (np.abs(pts[:, 0] - cx) <= r) & (np.abs(pts[:, 1] - cy) <= r)


@dataclass(frozen=True)
class Edge:
    """One edge: endpoint vertex indices, length, and a plane parameterization.

    ``kind`` is "segment" (straight chord between the endpoint vertices) or
    "arc" (full circle of given radius around ``arc_center``, parameterized by
    arclength counterclockwise from angle 0). Arc edges are closed: both
    endpoint indices coincide and the straight-chord length invariant does not
    apply to them.
    """

    a: int
    b: int
    length: float
    kind: str = "segment"
    arc_center: tuple[float, float] | None = None
    arc_radius: float | None = None

    def points(self, graph: "MetricGraph", x: np.ndarray) -> np.ndarray:
        """Embedded plane points at arclength parameters ``x`` in [0, length]."""
        x = np.asarray(x, dtype=float)
        if self.kind == "segment":
            t = x / self.length
            va = graph.vertices[self.a]
            vb = graph.vertices[self.b]
            # convex combination reproduces the endpoints exactly in floats
            return np.outer(1.0 - t, va) + np.outer(t, vb)
        cx, cy = self.arc_center
        theta = x / self.arc_radius
        return np.stack(
            [cx + self.arc_radius * np.cos(theta), cy + self.arc_radius * np.sin(theta)],
            axis=-1,
        )


@dataclass(frozen=True)
class Junction:
    """Pair of edges meeting at a vertex.

    ``reverse_*`` says whether the edge must be traversed from its stored end
    (parameter length -> 0) so that both traversals start at the shared vertex.
    ``label`` tags the geometric role of a pair (builders assign e.g. "EN",
    "EW" on graph paper) so norm kinds can select the pairs they weigh.
    """

    edge_a: int
    edge_b: int
    reverse_a: bool = False
    reverse_b: bool = False
    label: str = ""

    def shared_vertex(self, graph: "MetricGraph") -> int:
        ea = graph.edges[self.edge_a]
        return ea.b if self.reverse_a else ea.a


@dataclass(frozen=True)
class GraphFamily:
    """Tagged graph family with its scale parameters."""

    tag: str
    scale: float | None = None
    radius: float | None = None

    @classmethod
    def interval_line(cls) -> "GraphFamily":
        return cls("IntervalLine")

    @classmethod
    def half_line_pair(cls) -> "GraphFamily":
        return cls("HalfLinePair")

    @classmethod
    def integer_graph(cls) -> "GraphFamily":
        return cls("IntegerGraph", scale=1.0)

    @classmethod
    def square(cls, delta: float) -> "GraphFamily":
        return cls("Square", scale=float(delta))

    @classmethod
    def graph_paper(cls, delta: float) -> "GraphFamily":
        return cls("GraphPaper", scale=float(delta))

    @classmethod
    def circle(cls, radius: float) -> "GraphFamily":
        return cls("Circle", radius=float(radius))

    @classmethod
    def pencil(cls, delta: float) -> "GraphFamily":
        return cls("Pencil", scale=float(delta))

    def __post_init__(self):
        if self.scale is not None and not self.scale > 0:
            raise BuildError(f"{self.tag}: scale must be positive, got {self.scale}")
        if self.radius is not None and not self.radius > 0:
            raise BuildError(f"{self.tag}: radius must be positive, got {self.radius}")


@dataclass
class MetricGraph:
    vertices: np.ndarray  # (V, 2)
    edges: list[Edge]
    junctions: list[Junction]
    family: GraphFamily | None = None
    window: Window | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def total_length(self) -> float:
        return float(sum(e.length for e in self.edges))

    def validate(self) -> None:
        """Check the structural invariants; raises BuildError on violation."""
        for i, e in enumerate(self.edges):
            if not (0 <= e.a < self.n_vertices and 0 <= e.b < self.n_vertices):
                raise BuildError(f"edge {i} references missing vertex")
            if not e.length > 0:
                raise BuildError(f"edge {i} has nonpositive length {e.length}")
            if e.kind == "segment":
                d = float(np.hypot(*(self.vertices[e.b] - self.vertices[e.a])))
                if abs(d - e.length) > _LENGTH_RTOL * max(1.0, e.length):
                    raise BuildError(
                        f"edge {i}: length {e.length} != endpoint distance {d}"
                    )
        seen = set()
        for j in self.junctions:
            ea, eb = self.edges[j.edge_a], self.edges[j.edge_b]
            va = ea.b if j.reverse_a else ea.a
            vb = eb.b if j.reverse_b else eb.a
            if va != vb:
                raise BuildError(
                    f"junction ({j.edge_a},{j.edge_b}) edges do not share a start vertex"
                )
            key = (min(j.edge_a, j.edge_b), max(j.edge_a, j.edge_b))
            if key in seen:
                raise BuildError(f"duplicate junction pair {key}")
            seen.add(key)

    def to_json_dict(self) -> dict:
        return {
            "vertices": [[float(x), float(y)] for x, y in self.vertices],
            "edges": [{"a": e.a, "b": e.b, "len": e.length} for e in self.edges],
            "junctions": [[j.edge_a, j.edge_b] for j in self.junctions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def build_graph(family: GraphFamily, window: Window) -> MetricGraph:
    """Truncate ``family`` to ``window`` and return the metric graph."""
    builders = {
        "IntervalLine": _build_interval_line,
        "HalfLinePair": _build_half_line_pair,
        "IntegerGraph": _build_integer_graph,
        "Square": _build_square,
        "GraphPaper": _build_graph_paper,
        "Circle": _build_circle,
        "Pencil": _build_pencil,
    }
    if family.tag not in builders:
        raise BuildError(f"unknown graph family {family.tag!r}")
    g = builders[family.tag](family, window)
    g.family = family
    g.window = window
    g.validate()
    return g


def _build_interval_line(family: GraphFamily, window: Window) -> MetricGraph:
    cx, cy = window.center
    r = window.half_width
    verts = np.array([[cx - r, cy], [cx + r, cy]])
    g = MetricGraph(verts, [Edge(0, 1, 2 * r)], [])
    # both ends are truncation cuts of the infinite line
    g.meta["open_ends"] = [(0, 0), (0, 1)]
    return g


def _build_half_line_pair(family: GraphFamily, window: Window) -> MetricGraph:
    cx, cy = window.center
    r = window.half_width
    verts = np.array([[cx, cy], [cx + r, cy], [cx - r, cy]])
    edges = [Edge(0, 1, r), Edge(0, 2, r)]
    g = MetricGraph(verts, edges, [Junction(0, 1, label="origin")])
    g.meta["open_ends"] = [(0, 1), (1, 1)]
    return g


def _build_integer_graph(family: GraphFamily, window: Window) -> MetricGraph:
    cx, cy = window.center
    r = window.half_width
    k0 = math.ceil(cx - r - 1e-9)
    k1 = math.floor(cx + r + 1e-9)
    if k1 - k0 < 1:
        raise BuildError("window too small: no full unit edge fits")
    ks = np.arange(k0, k1 + 1)
    verts = np.stack([ks.astype(float), np.full(ks.size, cy)], axis=1)
    edges = [Edge(i, i + 1, 1.0) for i in range(ks.size - 1)]
    junctions = [
        Junction(i - 1, i, reverse_a=True, label="through")
        for i in range(1, len(edges))
    ]
    return MetricGraph(verts, edges, junctions)


def _build_square(family: GraphFamily, window: Window) -> MetricGraph:
    d = family.scale
    if 2 * window.half_width < d - 1e-12:
        raise BuildError(f"window too small for one {d}-square cell")
    verts = np.array([[0.0, 0.0], [d, 0.0], [d, d], [0.0, d]])
    # bottom, right, top, left with axis-aligned parameterizations
    edges = [
        Edge(0, 1, d),  # (x, 0)
        Edge(1, 2, d),  # (d, y)
        Edge(3, 2, d),  # (x, d)
        Edge(0, 3, d),  # (0, y)
    ]
    junctions = [
        Junction(0, 3, label="corner"),                             # at (0,0)
        Junction(0, 1, reverse_a=True, label="corner"),             # at (d,0)
        Junction(1, 2, reverse_a=True, reverse_b=True, label="corner"),  # at (d,d)
        Junction(2, 3, reverse_b=True, label="corner"),             # at (0,d)
    ]
    return MetricGraph(verts, edges, junctions)


def _build_graph_paper(family: GraphFamily, window: Window) -> MetricGraph:
    d = family.scale
    cx, cy = window.center
    r = window.half_width
    if 2 * r < d - 1e-12:
        raise BuildError(f"window too small for one {d}-cell of graph paper")
    j0 = math.ceil((cx - r) / d - 1e-9)
    j1 = math.floor((cx + r) / d + 1e-9)
    k0 = math.ceil((cy - r) / d - 1e-9)
    k1 = math.floor((cy + r) / d + 1e-9)
    js = np.arange(j0, j1 + 1)
    ks = np.arange(k0, k1 + 1)
    nj, nk = js.size, ks.size
    if nj < 2 or nk < 2:
        raise BuildError("window too small for one cell of graph paper")

    def vid(j, k):
        return (j - j0) * nk + (k - k0)

    xs = js.astype(float) * d
    ys = ks.astype(float) * d
    verts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)

    edges: list[Edge] = []
    h_idx: dict[tuple[int, int], int] = {}  # (j,k) -> edge (j,k)->(j+1,k)
    v_idx: dict[tuple[int, int], int] = {}  # (j,k) -> edge (j,k)->(j,k+1)
    for j in range(j0, j1):
        for k in range(k0, k1 + 1):
            h_idx[(j, k)] = len(edges)
            edges.append(Edge(vid(j, k), vid(j + 1, k), d))
    for j in range(j0, j1 + 1):
        for k in range(k0, k1):
            v_idx[(j, k)] = len(edges)
            edges.append(Edge(vid(j, k), vid(j, k + 1), d))

    # All six unordered pairs per vertex are stored; the graph-paper norm
    # weighs only EN, WS (cross) and EW, NS (straight-through).
    junctions: list[Junction] = []
    for j in range(j0, j1 + 1):
        for k in range(k0, k1 + 1):
            east = h_idx.get((j, k))
            west = h_idx.get((j - 1, k))
            north = v_idx.get((j, k))
            south = v_idx.get((j, k - 1))
            if east is not None and north is not None:
                junctions.append(Junction(east, north, label="EN"))
            if west is not None and south is not None:
                junctions.append(Junction(west, south, True, True, label="WS"))
            if east is not None and west is not None:
                junctions.append(Junction(east, west, False, True, label="EW"))
            if north is not None and south is not None:
                junctions.append(Junction(north, south, False, True, label="NS"))
            if east is not None and south is not None:
                junctions.append(Junction(east, south, False, True, label="ES"))
            if west is not None and north is not None:
                junctions.append(Junction(west, north, True, False, label="WN"))

    g = MetricGraph(verts, edges, junctions)
    g.meta["lattice"] = {
        "delta": d,
        "j0": j0,
        "j1": j1,
        "k0": k0,
        "k1": k1,
        "n_horizontal": len(h_idx),
    }
    return g


def _build_circle(family: GraphFamily, window: Window) -> MetricGraph:
    r = family.radius
    cx, cy = window.center
    verts = np.array([[cx + r, cy]])
    edge = Edge(0, 0, 2 * math.pi * r, kind="arc", arc_center=(cx, cy), arc_radius=r)
    return MetricGraph(verts, [edge], [Junction(0, 0, False, True, label="self")])


def _build_pencil(family: GraphFamily, window: Window) -> MetricGraph:
    d = family.scale
    cx, cy = window.center
    r = window.half_width
    k0 = math.ceil((cy - r) / d - 1e-9)
    k1 = math.floor((cy + r) / d + 1e-9)
    if k1 < k0:
        raise BuildError("window too small: no pencil line inside")
    verts = []
    edges = []
    for i, k in enumerate(range(k0, k1 + 1)):
        y = k * d
        verts.append([cx - r, y])
        verts.append([cx + r, y])
        edges.append(Edge(2 * i, 2 * i + 1, 2 * r))
    g = MetricGraph(np.array(verts), edges, [])
    g.meta["pencil"] = {"delta": d, "k0": k0, "k1": k1}
    return g


def graph_paper_edge_indices(g: MetricGraph) -> tuple[dict, dict]:
    """Rebuild the (j, k) -> edge-index maps of an unrestricted graph paper."""
    if "lattice" not in g.meta:
        raise BuildError("not a graph-paper graph")
    lat = g.meta["lattice"]
    j0, j1, k0, k1 = lat["j0"], lat["j1"], lat["k0"], lat["k1"]
    nk = k1 - k0 + 1
    h_idx = {}
    v_idx = {}
    for j in range(j0, j1):
        for k in range(k0, k1 + 1):
            h_idx[(j, k)] = (j - j0) * nk + (k - k0)
    n_h = len(h_idx)
    if n_h != lat["n_horizontal"]:
        raise BuildError("graph paper was restricted; edge index maps unavailable")
    for j in range(j0, j1 + 1):
        for k in range(k0, k1):
            v_idx[(j, k)] = n_h + (j - j0) * (nk - 1) + (k - k0)
    return h_idx, v_idx


def restrict_graph(g: MetricGraph, region: Window) -> MetricGraph:
    """Keep exactly the edges contained in ``region`` and the junction pairs
    both of whose edges survive. An empty result is an empty graph."""
    pad = 1e-12 * max(1.0, region.half_width)
    keep_edge = []
    for e in g.edges:
        if e.kind == "segment":
            inside = bool(
                region.contains(g.vertices[e.a], pad)[0]
                and region.contains(g.vertices[e.b], pad)[0]
            )
        else:
            cx, cy = e.arc_center
            corners = np.array(
                [
                    [cx - e.arc_radius, cy - e.arc_radius],
                    [cx + e.arc_radius, cy + e.arc_radius],
                ]
            )
            inside = bool(region.contains(corners, pad).all())
        keep_edge.append(inside)

    old_to_new_edge = {}
    new_edges_src = []
    for i, keep in enumerate(keep_edge):
        if keep:
            old_to_new_edge[i] = len(new_edges_src)
            new_edges_src.append(g.edges[i])

    used_verts = sorted({e.a for e in new_edges_src} | {e.b for e in new_edges_src})
    vmap = {v: i for i, v in enumerate(used_verts)}
    verts = g.vertices[used_verts] if used_verts else np.zeros((0, 2))
    edges = [replace(e, a=vmap[e.a], b=vmap[e.b]) for e in new_edges_src]
    junctions = [
        replace(j, edge_a=old_to_new_edge[j.edge_a], edge_b=old_to_new_edge[j.edge_b])
        for j in g.junctions
        if j.edge_a in old_to_new_edge and j.edge_b in old_to_new_edge
    ]
    out = MetricGraph(verts, edges, junctions, family=g.family, window=region)
    out.meta = dict(g.meta)
    if "lattice" in out.meta:
        n_h_old = out.meta["lattice"]["n_horizontal"]
        lattice = dict(out.meta["lattice"])
        lattice["n_horizontal"] = sum(1 for i in old_to_new_edge if i < n_h_old)
        out.meta["lattice"] = lattice
    if "open_ends" in out.meta:
        out.meta["open_ends"] = [
            (old_to_new_edge[e], end)
            for e, end in out.meta["open_ends"]
            if e in old_to_new_edge
        ]
    out.validate()
    return out
