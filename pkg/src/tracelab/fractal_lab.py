"""Sierpinski gasket and carpet: graph approximations, renormalized energies,
energy-minimizing extension, trace-norm profiles, and the carpet resistance
scaling estimate.

Vertices are addressed on exact integer lattices (triangular for the gasket,
square for the carpet), so shared vertices deduplicate without floating-point
comparisons and restriction between levels is integer key scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import BuildError, SolverError
from .functions import EdgeFunction, FunctionFamily
from .graphs import Edge, MetricGraph
from .seminorms import NormKind, seminorm

__all__ = [
    "FractalApprox",
    "VertexFunction",
    "build_fractal",
    "gasket_beta",
    "carpet_beta",
    "edge_scale_factor",
    "sg_graph_energy",
    "sg_harmonic_extend",
    "sg_renormalized_profile",
    "sg_cell_restriction",
    "h_beta_trace_profile",
    "sc_graph_energy",
    "sc_renorm_estimate",
]

_SG_MAX_LEVEL = 8
_SC_MAX_LEVEL = 5

_ROOT3_HALF = math.sqrt(3.0) / 2.0


def gasket_beta() -> float:
    """Trace-space order on the gasket: 1/2 + log(5/3)/log 4."""
    return 0.5 + math.log(5.0 / 3.0) / math.log(4.0)


def carpet_beta(r: float) -> float:
    """Trace-space order on the carpet for renormalization constant r."""
    return 0.5 + math.log(r) / math.log(9.0)


def edge_scale_factor(beta: float, contraction: int) -> float:
    """Per-level factor of a single edge's H^beta integral under refinement.

    An edge of length ratio 1/contraction carries contraction^{2 beta - 1}
    times the unit-edge integral of the rescaled function; at the gasket beta
    with contraction 2 this equals 5/3, at the carpet beta with contraction 3
    it equals r.
    """
    return float(contraction) ** (2.0 * beta - 1.0)


@dataclass
class FractalApprox:
    """Addressed graph approximation of the gasket (SG_m) or carpet (SC_m)."""

    kind: str  # "sg" | "sc"
    level: int
    vertices: np.ndarray        # (V, 2) plane coordinates
    vertex_keys: np.ndarray     # (V, 2) exact integer lattice keys
    key_index: dict
    edges: np.ndarray           # (E, 2) vertex ids
    edge_length: float
    cells: np.ndarray           # (C, 3) vertex ids (sg) or (C, 4) corners (sc)
    words: list[tuple[int, ...]]
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def ifs_maps(self) -> list[tuple[float, tuple[float, float]]]:
        """Level-1 contraction maps as (ratio, offset): Phi(p) = ratio p + offset."""
        if self.kind == "sg":
            qs = [(0.0, 0.0), (1.0, 0.0), (0.5, _ROOT3_HALF)]
            return [(0.5, (qx / 2.0, qy / 2.0)) for qx, qy in qs]
        offs = [(i, j) for j in range(3) for i in range(3) if (i, j) != (1, 1)]
        return [(1.0 / 3.0, (i / 3.0, j / 3.0)) for i, j in offs]

    def to_metric_graph(self) -> MetricGraph:
        edges = [Edge(int(a), int(b), self.edge_length) for a, b in self.edges]
        g = MetricGraph(self.vertices.copy(), edges, [])
        g.meta["fractal"] = {"kind": self.kind, "level": self.level}
        g.validate()
        return g


def _sg_coords(keys: np.ndarray, level: int) -> np.ndarray:
    s = 2.0 ** (-level)
    x = (keys[:, 0] + 0.5 * keys[:, 1]) * s
    y = keys[:, 1] * (_ROOT3_HALF * s)
    return np.stack([x, y], axis=1)


def _build_sg(m: int) -> FractalApprox:
    # cells tracked by (lower-left key, side length in lattice units, word)
    cells = [((0, 0), 2**m, ())]
    for _ in range(m):
        nxt = []
        for (i, j), s, w in cells:
            hs = s // 2
            nxt.append(((i, j), hs, w + (0,)))
            nxt.append(((i + hs, j), hs, w + (1,)))
            nxt.append(((i, j + hs), hs, w + (2,)))
        cells = nxt

    key_index: dict = {}
    verts_keys: list[tuple[int, int]] = []

    def vid(key):
        if key not in key_index:
            key_index[key] = len(verts_keys)
            verts_keys.append(key)
        return key_index[key]

    cell_ids = np.empty((len(cells), 3), dtype=np.int64)
    words = []
    edges = set()
    for c, ((i, j), s, w) in enumerate(cells):
        v0 = vid((i, j))
        v1 = vid((i + 1, j))
        v2 = vid((i, j + 1))
        cell_ids[c] = (v0, v1, v2)
        words.append(w)
        edges.add((min(v0, v1), max(v0, v1)))
        edges.add((min(v0, v2), max(v0, v2)))
        edges.add((min(v1, v2), max(v1, v2)))

    keys = np.array(verts_keys, dtype=np.int64)
    return FractalApprox(
        kind="sg",
        level=m,
        vertices=_sg_coords(keys, m),
        vertex_keys=keys,
        key_index=key_index,
        edges=np.array(sorted(edges), dtype=np.int64),
        edge_length=2.0 ** (-m),
        cells=cell_ids,
        words=words,
    )


def _sc_cells(m: int) -> list[tuple[tuple[int, int], tuple[int, ...]]]:
    cells = [((0, 0), ())]
    branch = [(i, j) for j in range(3) for i in range(3) if (i, j) != (1, 1)]
    for _ in range(m):
        nxt = []
        for (ci, cj), w in cells:
            for b, (oi, oj) in enumerate(branch):
                nxt.append(((3 * ci + oi, 3 * cj + oj), w + (b + 1,)))
        cells = nxt
    return cells


def _build_sc(m: int) -> FractalApprox:
    cells = _sc_cells(m)
    key_index: dict = {}
    verts_keys: list[tuple[int, int]] = []

    def vid(key):
        if key not in key_index:
            key_index[key] = len(verts_keys)
            verts_keys.append(key)
        return key_index[key]

    cell_ids = np.empty((len(cells), 4), dtype=np.int64)
    words = []
    edges = set()
    for c, ((i, j), w) in enumerate(cells):
        corners = [vid((i, j)), vid((i + 1, j)), vid((i + 1, j + 1)), vid((i, j + 1))]
        cell_ids[c] = corners
        words.append(w)
        for a in range(4):
            u, v = corners[a], corners[(a + 1) % 4]
            edges.add((min(u, v), max(u, v)))

    keys = np.array(verts_keys, dtype=np.int64)
    return FractalApprox(
        kind="sc",
        level=m,
        vertices=keys.astype(float) * 3.0 ** (-m),
        vertex_keys=keys,
        key_index=key_index,
        edges=np.array(sorted(edges), dtype=np.int64),
        edge_length=3.0 ** (-m),
        cells=cell_ids,
        words=words,
    )


def build_fractal(kind: str, m: int) -> FractalApprox:
    """Level-m graph approximation, shared vertices deduplicated."""
    if m < 0:
        raise BuildError(f"level must be nonnegative, got {m}")
    kind = kind.lower()
    if kind == "sg":
        if m > _SG_MAX_LEVEL:
            raise BuildError(f"gasket level {m} above desk bound {_SG_MAX_LEVEL}")
        return _build_sg(m)
    if kind == "sc":
        if m > _SC_MAX_LEVEL:
            raise BuildError(f"carpet level {m} above desk bound {_SC_MAX_LEVEL}")
        return _build_sc(m)
    raise BuildError(f"unknown fractal kind {kind!r} (want 'sg' or 'sc')")


@dataclass
class VertexFunction:
    """One real value per vertex of a fractal approximation."""

    approx: FractalApprox
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.approx.n_vertices,):
            raise BuildError(
                f"need {self.approx.n_vertices} vertex values, got {self.values.shape}"
            )
        if not np.isfinite(self.values).all():
            raise BuildError("vertex values must be finite")

    @classmethod
    def from_family(cls, approx: FractalApprox, fam: FunctionFamily) -> "VertexFunction":
        v = approx.vertices
        return cls(approx, fam.evaluate(v[:, 0], v[:, 1]))

    @classmethod
    def from_boundary(cls, approx: FractalApprox, b0: float, b1: float, b2: float) -> "VertexFunction":
        """Gasket level-0 data at the three corners q0, q1, q2."""
        if approx.kind != "sg" or approx.level != 0:
            raise BuildError("from_boundary needs the level-0 gasket")
        vals = np.zeros(3)
        for key, val in ((_sg_corner_key(approx.level, 0), b0),
                         (_sg_corner_key(approx.level, 1), b1),
                         (_sg_corner_key(approx.level, 2), b2)):
            vals[approx.key_index[key]] = val
        return cls(approx, vals)


def _sg_corner_key(level: int, corner: int) -> tuple[int, int]:
    s = 2**level
    return [(0, 0), (s, 0), (0, s)][corner]


def restrict_vertex_function(f: VertexFunction, m: int) -> VertexFunction:
    """Restriction to the level-m vertex set (m <= the function's level)."""
    M = f.approx.level
    if m > M:
        raise BuildError(f"cannot restrict level-{M} data to finer level {m}")
    if m == M:
        return f
    coarse = build_fractal(f.approx.kind, m)
    scale = (2 if f.approx.kind == "sg" else 3) ** (M - m)
    idx = np.array(
        [f.approx.key_index[(int(a) * scale, int(b) * scale)] for a, b in coarse.vertex_keys]
    )
    return VertexFunction(coarse, f.values[idx])


# ---------------------------------------------------------------------------
# gasket energies

def sg_graph_energy(f: VertexFunction, m: int | None = None) -> float:
    """Unrenormalized gasket graph energy: cell-wise sums of squared
    differences over unordered vertex pairs (three terms per cell)."""
    if f.approx.kind != "sg":
        raise BuildError("sg_graph_energy needs gasket data")
    if m is not None and m != f.approx.level:
        f = restrict_vertex_function(f, m)
    v = f.values[f.approx.cells]  # (C, 3)
    d01 = v[:, 0] - v[:, 1]
    d02 = v[:, 0] - v[:, 2]
    d12 = v[:, 1] - v[:, 2]
    return float(np.sum(d01 * d01 + d02 * d02 + d12 * d12))


def sg_renormalized_energy(f: VertexFunction, m: int | None = None) -> float:
    level = f.approx.level if m is None else m
    return (5.0 / 3.0) ** level * sg_graph_energy(f, m)


def sg_renormalized_profile(f: VertexFunction) -> list[dict]:
    """(m, E_m, (5/3)^m E_m) for m = 0 .. the data's level; nondecreasing."""
    rows = []
    for m in range(f.approx.level + 1):
        em = sg_graph_energy(f, m)
        rows.append({"m": m, "raw": em, "renormalized": (5.0 / 3.0) ** m * em})
    return rows


def _laplacian(n: int, edges: np.ndarray) -> sparse.csr_matrix:
    a, b = edges[:, 0], edges[:, 1]
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([np.ones(a.size), np.ones(a.size), -np.ones(a.size), -np.ones(a.size)])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _clamped_minimize(n: int, edges: np.ndarray, fixed_idx: np.ndarray, fixed_vals: np.ndarray) -> np.ndarray:
    """Minimize sum over edges of (x_u - x_v)^2 with given values clamped."""
    L = _laplacian(n, edges)
    free = np.setdiff1d(np.arange(n), fixed_idx)
    x = np.zeros(n)
    x[fixed_idx] = fixed_vals
    if free.size:
        rhs = -(L[free][:, fixed_idx] @ fixed_vals)
        sol = spsolve(L[free][:, free].tocsc(), rhs)
        x[free] = np.atleast_1d(sol)
        residual = float(np.max(np.abs(L[free][:, free] @ x[free] - rhs)))
        scale = max(1.0, float(np.max(np.abs(rhs)))) if rhs.size else 1.0
        if residual > 1e-8 * scale:
            raise SolverError(f"clamped minimization residual {residual:.3e}")
    return x


def sg_harmonic_extend(f: VertexFunction, to_level: int) -> VertexFunction:
    """Energy-minimizing extension of level-m data to a finer gasket level.

    Global sparse minimization of the finer graph energy with the given
    values clamped; the classical midpoint interpolation values emerge.
    """
    if f.approx.kind != "sg":
        raise BuildError("sg_harmonic_extend needs gasket data")
    m = f.approx.level
    if to_level < m:
        raise BuildError("target level must be at least the data level")
    if to_level > _SG_MAX_LEVEL:
        raise BuildError(f"gasket level {to_level} above desk bound {_SG_MAX_LEVEL}")
    if to_level == m:
        return f
    fine = build_fractal("sg", to_level)
    scale = 2 ** (to_level - m)
    fixed_idx = np.array(
        [fine.key_index[(int(a) * scale, int(b) * scale)] for a, b in f.approx.vertex_keys]
    )
    x = _clamped_minimize(fine.n_vertices, fine.edges, fixed_idx, f.values)
    return VertexFunction(fine, x)


def sg_cell_restriction(f: VertexFunction, branch: int) -> VertexFunction:
    """The composition f o Phi_branch as level-(M-1) data on the unit gasket."""
    if f.approx.kind != "sg" or f.approx.level < 1:
        raise BuildError("cell restriction needs gasket data at level >= 1")
    M = f.approx.level
    sub = build_fractal("sg", M - 1)
    qkey = _sg_corner_key(M - 1, branch)
    idx = np.array(
        [
            f.approx.key_index[(int(a) + qkey[0], int(b) + qkey[1])]
            for a, b in sub.vertex_keys
        ]
    )
    return VertexFunction(sub, f.values[idx])


def sg_edge_function(f: VertexFunction, m: int) -> EdgeFunction:
    """Level-M vertex data as piecewise-linear samples on the SG_m edges.

    Each SG_m edge carries 2^{M-m} + 1 level-M vertices; those values are the
    samples (continuity at shared endpoints is inherited from the vertex data).
    """
    M = f.approx.level
    if not 0 <= m < M:
        raise BuildError("need sample level strictly finer than the edge level")
    coarse = build_fractal("sg", m)
    scale = 2 ** (M - m)
    samples = []
    for a, b in coarse.edges:
        ka = coarse.vertex_keys[a] * scale
        kb = coarse.vertex_keys[b] * scale
        step = (kb - ka) // scale
        ids = [
            f.approx.key_index[(int(ka[0] + s * step[0]), int(ka[1] + s * step[1]))]
            for s in range(scale + 1)
        ]
        samples.append(f.values[ids])
    return EdgeFunction(coarse.to_metric_graph(), samples, continuous=True)


def h_beta_trace_profile(
    f: VertexFunction, depth: int, beta: float | None = None
) -> list[dict]:
    """H^beta trace norms of level-M gasket data on SG_m for m = 0 .. depth."""
    if beta is None:
        beta = gasket_beta()
    if not (0.5 < beta < 1.0):
        raise BuildError(f"beta must lie in (1/2, 1), got {beta}")
    M = f.approx.level
    if depth >= M:
        raise BuildError("profile depth must be strictly below the data level")
    renorm = sg_renormalized_energy(f)
    rows = []
    for m in range(depth + 1):
        ef = sg_edge_function(f, m)
        rep = seminorm(ef, NormKind.h_beta(beta))
        rows.append(
            {
                "m": m,
                "norm2": rep.value,
                "renormalized_energy": renorm,
                "resolution": rep.resolution,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# carpet

def sc_graph_energy(f: VertexFunction) -> float:
    """Grid-graph energy of SC_m: squared differences over the edge set."""
    if f.approx.kind != "sc":
        raise BuildError("sc_graph_energy needs carpet data")
    d = f.values[f.approx.edges[:, 0]] - f.values[f.approx.edges[:, 1]]
    return float(np.sum(d * d))


def sc_resistance(m: int) -> float:
    """Effective resistance of SC_m between its left and right boundary edges.

    Unit conductors on the grid graph, whole sides clamped to 0/1 potentials;
    normalized so the level-0 square has unit resistance (a factor 2), which
    leaves the level ratios untouched.
    """
    approx = build_fractal("sc", m)
    n_side = 3**m
    left = np.where(approx.vertex_keys[:, 0] == 0)[0]
    right = np.where(approx.vertex_keys[:, 0] == n_side)[0]
    fixed = np.concatenate([left, right])
    vals = np.concatenate([np.zeros(left.size), np.ones(right.size)])
    x = _clamped_minimize(approx.n_vertices, approx.edges, fixed, vals)
    d = x[approx.edges[:, 0]] - x[approx.edges[:, 1]]
    energy = float(np.sum(d * d))
    if energy <= 0:
        raise SolverError("degenerate carpet resistance solve")
    return 2.0 / energy


def sc_renorm_estimate(max_level: int) -> list[dict]:
    """Resistances R_m for m = 0 .. max_level and ratios R_{m+1}/R_m, the
    constructive estimate of the carpet renormalization constant."""
    if max_level > _SC_MAX_LEVEL:
        raise BuildError(f"carpet level {max_level} above desk bound {_SC_MAX_LEVEL}")
    rows = []
    prev = None
    for m in range(max_level + 1):
        r = sc_resistance(m)
        row = {"m": m, "resistance": r}
        if prev is not None:
            row["ratio"] = r / prev
            row["beta"] = carpet_beta(r / prev)
        prev = r
        rows.append(row)
    return rows
