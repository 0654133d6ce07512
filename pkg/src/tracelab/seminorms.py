"""Quadrature engine for the half-order seminorms on metric graphs.

Every norm is a sum of two kinds of terms evaluated on the piecewise-linear
interpolant of the per-edge samples:

* same-edge double integrals with a singular difference kernel, computed
  cell-pair-wise: off-diagonal cell pairs by fixed 4-point tensor
  Gauss-Legendre, the diagonal cell in closed form (for a linear interpolant
  with slope a and exponent-p kernel the diagonal cell contributes
  a^2 * 2 h^{4-p} / ((3-p)(4-p)); for p = 2 that is a^2 h^2 exactly);
* junction single integrals comparing two edges from a shared vertex with
  weight 1/x, whose first cell is closed-form as well (a^2 h^2 / 2 when the
  function is continuous at the vertex, +inf when it jumps).

Diagonal singularities are handled by those closed forms, never by epsilon
excision, so small cases are exactly checkable. Summation is a fixed pairwise
reduction over a canonical term order, making results reproducible run to run
and independent of any worker parallelism.

Full-line kernels see a truncated window; for the non-local |x-y|^{-2} kernel
the missing mass is O(1/R) even for rapidly decaying functions, so the
HalfGraph/HalfLine kinds add a closed-form tail term that freezes the function
at its boundary value outside the window (same device as the Poisson
quadrature uses). Kinds whose kernels are local (tilde, lattice, pencil) never
need it, and the tail can be disabled to study raw truncation growth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BuildError, KindMismatchError
from .functions import EdgeFunction

__all__ = [
    "NormKind",
    "NormReport",
    "edge_double_integral",
    "junction_integral",
    "seminorm",
]

_nodes, _weights = np.polynomial.legendre.leggauss(4)
_GL_NODES = 0.5 * (_nodes + 1.0)  # on [0, 1]
_GL_WEIGHTS = 0.5 * _weights

# work threshold above which single long edges switch to FFT correlations
_FFT_MIN_N = 128
_FFT_MIN_WORK = 1_000_000


# ---------------------------------------------------------------------------
# kernels

def _pow2m1_over(x: float) -> float:
    """(2^x - 1) / x with its limit log 2 at x = 0."""
    if x == 0.0:
        return math.log(2.0)
    return math.expm1(x * math.log(2.0)) / x


def _adjacent_moments(p: float) -> tuple[float, float]:
    """J2 = int_{[0,1]^2} s^2 (s+t)^{-p}, J11 = int st (s+t)^{-p}.

    Two cells sharing a corner contribute, for interpolant slopes (a, a'),
    exactly (a^2 + a'^2) J2 h^{4-p} + 2 a a' J11 h^{4-p} per ordered pair.
    """
    B = (
        _pow2m1_over(4.0 - p)
        - 2.0 * _pow2m1_over(3.0 - p)
        + _pow2m1_over(2.0 - p)
    )
    j2 = (B - 1.0 / (4.0 - p)) / (1.0 - p)
    A = (2.0 ** (4.0 - p) - 2.0) / ((3.0 - p) * (4.0 - p))
    j11 = 0.5 * (A - 2.0 * j2)
    return j2, j11


@dataclass(frozen=True)
class _PowerKernel:
    """K(u) = |u|^{-p} for p in [2, 3)."""

    p: float

    def eval(self, u):
        return np.abs(u) ** (-self.p)

    def diag_coeff(self, h: float) -> float:
        p = self.p
        return 2.0 * h ** (4.0 - p) / ((3.0 - p) * (4.0 - p))

    def adjacent_coeffs(self, h: float) -> tuple[float, float]:
        j2, j11 = _adjacent_moments(self.p)
        s = h ** (4.0 - self.p)
        return j2 * s, j11 * s


@dataclass(frozen=True)
class _ChordKernel:
    """Chordal kernel on a circle of radius r: K(u) = (2 r sin(u / 2r))^{-2}."""

    radius: float

    def eval(self, u):
        c = 2.0 * self.radius * np.sin(np.abs(u) / (2.0 * self.radius))
        return 1.0 / (c * c)

    def diag_coeff(self, h: float) -> float:
        return h * h  # chord ~ |u| on the diagonal cell

    def adjacent_coeffs(self, h: float) -> tuple[float, float]:
        j2, j11 = _adjacent_moments(2.0)  # same corner behaviour as |u|^{-2}
        return j2 * h * h, j11 * h * h


@dataclass(frozen=True)
class _SinhKernel:
    """K(u) = 1 / (4 sinh^2(u/2)); behaves like |u|^{-2} on the diagonal."""

    def eval(self, u):
        s = np.sinh(u / 2.0)
        return 0.25 / (s * s)

    def diag_coeff(self, h: float) -> float:
        return h * h

    def adjacent_coeffs(self, h: float) -> tuple[float, float]:
        j2, j11 = _adjacent_moments(2.0)
        return j2 * h * h, j11 * h * h


# ---------------------------------------------------------------------------
# batched same-edge double integrals

def _same_edge_batch(values: np.ndarray, h: float, kernel, max_gap: float | None = None) -> np.ndarray:
    """Double integrals over [0,L]^2 with difference kernel, one per row.

    ``values`` has shape (E, N+1). When ``max_gap`` is set the integration is
    restricted to |x - y| <= max_gap (kernel zeroed at excluded quadrature
    nodes, cell pairs entirely out of range skipped).
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    E, n1 = values.shape
    N = n1 - 1
    # centering is exact for constant rows and removes cancellation noise
    values = values - values.mean(axis=1, keepdims=True)

    slopes = np.diff(values, axis=1) / h
    out = kernel.diag_coeff(h) * np.sum(slopes * slopes, axis=1)

    if N < 2:
        return out
    d_max = N - 1
    if max_gap is not None:
        if max_gap < 2.0 * h:
            raise BuildError("range restriction finer than two cells is not supported")
        d_max = min(d_max, int(math.floor(max_gap / h)) + 1)

    # adjacent pairs share a corner singularity: closed form on the interpolant
    c_same, c_cross = kernel.adjacent_coeffs(h)
    a, b = slopes[:, :-1], slopes[:, 1:]
    out += 2.0 * np.sum(c_same * (a * a + b * b) + 2.0 * c_cross * a * b, axis=1)

    if d_max < 2:
        return out
    g = _GL_NODES
    ww = np.outer(_GL_WEIGHTS, _GL_WEIGHTS) * h * h  # (4, 4)
    # offset table: x in cell i at (i + g_a) h, y in cell i+d at (i + d + g_b) h
    u = (np.arange(2, d_max + 1)[:, None, None] + g[None, None, :] - g[None, :, None]) * h
    K = kernel.eval(u)
    if max_gap is not None:
        K = np.where(u <= max_gap, K, 0.0)
    WK = ww[None, :, :] * K  # (d_max - 1, 4, 4)

    if N > _FFT_MIN_N and E * N * N > _FFT_MIN_WORK:
        out += _offset_sums_fft(values, WK, d_max)
    else:
        V = values[:, :-1, None] * (1.0 - g) + values[:, 1:, None] * g  # (E, N, 4)
        acc = np.zeros(E)
        for d in range(2, d_max + 1):
            D = V[:, :-d, :, None] - V[:, d:, None, :]
            acc += np.einsum("eiab,ab->e", D * D, WK[d - 2])
        out += 2.0 * acc
    return out


def _offset_sums_fft(values: np.ndarray, WK: np.ndarray, d_max: int) -> np.ndarray:
    """Sum_{d,a,b} WK[d,a,b] * sum_i (V[i,a] - V[i+d,b])^2 for d in [2, d_max],
    with the cross-correlations taken from one FFT per edge."""
    E, n1 = values.shape
    N = n1 - 1
    g = _GL_NODES
    out = np.zeros(E)
    m = 1 << int(np.ceil(np.log2(2 * N)))
    ds = np.arange(2, d_max + 1)
    for e in range(E):
        v = values[e]
        V = v[:-1, None] * (1.0 - g) + v[1:, None] * g  # (N, 4)
        sq = V * V
        csum = np.vstack([np.zeros(4), np.cumsum(sq, axis=0)])  # (N+1, 4)
        total = csum[-1]
        # S1[d, a] = sum_{i=0}^{N-1-d} V[i,a]^2 ; S2[d, b] = sum_{i=d}^{N-1} V[i,b]^2
        S1 = csum[N - ds]                     # (len(ds), 4)
        S2 = total[None, :] - csum[ds]        # (len(ds), 4)
        F = np.fft.rfft(V, n=m, axis=0)
        corr = np.fft.irfft(np.conj(F)[:, :, None] * F[:, None, :], n=m, axis=0)
        corr = corr[2 : d_max + 1]            # (len(ds), 4, 4): sum_i V[i,a] V[i+d,b]
        out[e] = 2.0 * float(
            np.sum(WK * (S1[:, :, None] + S2[:, None, :] - 2.0 * corr))
        )
    return out


# ---------------------------------------------------------------------------
# junction integrals

def _junction_batch(ga: np.ndarray, gb: np.ndarray, h: float) -> np.ndarray:
    """int_0^L |g_a(x) - g_b(x)|^2 / x dx on the linear interpolant, per row.

    The first cell is closed-form: zero jump at the vertex contributes
    a^2 h^2 / 2 exactly, a nonzero jump makes the integral diverge (+inf).
    Remaining cells are exact per-cell antiderivatives.
    """
    ga = np.atleast_2d(np.asarray(ga, dtype=float))
    gb = np.atleast_2d(np.asarray(gb, dtype=float))
    if ga.shape != gb.shape:
        raise BuildError("junction arrays must share shape")
    diff = ga - gb
    M = diff.shape[1] - 1
    jump = diff[:, 0]
    a0 = (diff[:, 1] - diff[:, 0]) / h
    out = np.where(jump == 0.0, 0.5 * a0 * a0 * h * h, np.inf)
    if M >= 2:
        k = np.arange(1, M)
        x_lo = k * h
        x_hi = (k + 1) * h
        beta = (diff[:, k + 1] - diff[:, k]) / h
        alpha = diff[:, k] - beta * x_lo
        logs = np.log(x_hi / x_lo)
        cells = (
            alpha * alpha * logs
            + 2.0 * alpha * beta * h
            + 0.5 * beta * beta * (x_hi * x_hi - x_lo * x_lo)
        )
        out = out + np.sum(cells, axis=1)
    return out


# ---------------------------------------------------------------------------
# boundary-value tail for truncated full-line kernels

def _tail_against_end(values: np.ndarray, h: float) -> float:
    """Closed-form int |f(x) - f(L)|^2 / (L - x) dx over the edge, i.e. the
    |x-y|^{-2} mass against a constant continuation beyond the edge's end."""
    d = values - values[-1]
    N = d.size - 1
    k = np.arange(N)
    u_hi = (N - k) * h
    u_lo = (N - k - 1) * h
    b = (d[k] - d[k + 1]) / h
    a = d[k + 1] - b * u_lo
    term = 2.0 * a * b * h + 0.5 * b * b * (u_hi * u_hi - u_lo * u_lo)
    safe_lo = np.where(u_lo > 0, u_lo, 1.0)
    term = term + np.where(u_lo > 0, a * a * np.log(u_hi / safe_lo), 0.0)
    return float(np.sum(term))


def _open_end_tail(f: EdgeFunction) -> float:
    ends = f.graph.meta.get("open_ends", [])
    parts = []
    for e, end in ends:
        vals = f.samples[e] if end == 1 else f.samples[e][::-1]
        # factor 2: both orders of the double integral meet each cut end
        parts.append(2.0 * _tail_against_end(vals, f.h(e)))
    return float(np.sum(parts)) if parts else 0.0


# ---------------------------------------------------------------------------
# public single-pair operations

def _check_exponent(p: float) -> None:
    if not (2.0 <= p < 3.0):
        raise BuildError(f"kernel exponent must lie in [2, 3), got {p}")


def edge_double_integral(f: EdgeFunction, e: int, e2: int, p: float = 2.0) -> float:
    """Double integral of |f(e(x)) - f(e2(y))|^2 / |x-y|^p over both parameter ranges.

    For e == e2 this is the Gagliardo-type seminorm contribution of one edge.
    For distinct edges the parameter diagonal x = y is a genuine singularity:
    the integral is +inf unless the two restrictions coincide, in which case
    it reduces to the single-edge value.
    """
    _check_exponent(p)
    if not (0 <= e < f.graph.n_edges and 0 <= e2 < f.graph.n_edges):
        raise BuildError("edge index out of range")
    kernel = _PowerKernel(p)
    if e == e2:
        return float(_same_edge_batch(f.samples[e][None, :], f.h(e), kernel)[0])
    va, vb = f.samples[e], f.samples[e2]
    if va.shape == vb.shape and f.h(e) == f.h(e2) and np.array_equal(va, vb):
        return float(_same_edge_batch(va[None, :], f.h(e), kernel)[0])
    return math.inf


def junction_integral(f: EdgeFunction, e: int, e2: int, L: float | None = None) -> float:
    """Junction term int_0^L |f(e(x)) - f(e2(x))|^2 / x dx.

    L defaults to min(L_e, L_e2) and may be shortened to any whole number of
    sample cells.
    """
    for j in f.graph.junctions:
        if {j.edge_a, j.edge_b} == {e, e2} or (e == e2 == j.edge_a == j.edge_b):
            return _junction_pair_value(f, j, L)
    raise BuildError(f"edges ({e}, {e2}) are not a junction pair of the graph")


def _junction_pair_value(f: EdgeFunction, j, L: float | None = None) -> float:
    ga = f.values_from_vertex(j.edge_a, j.reverse_a)
    gb = f.values_from_vertex(j.edge_b, j.reverse_b)
    ha, hb = f.h(j.edge_a), f.h(j.edge_b)
    if abs(ha - hb) > 1e-12 * max(ha, hb):
        raise BuildError("junction pair has mismatched sample spacings")
    m = min(ga.size, gb.size)
    if L is not None:
        cells = int(round(L / ha))
        if cells < 1 or cells > m - 1 or abs(cells * ha - L) > 1e-9 * max(ha, L):
            raise BuildError("junction range L must be a whole number of cells")
        m = cells + 1
    return float(_junction_batch(ga[None, :m], gb[None, :m], ha)[0])


# ---------------------------------------------------------------------------
# norm kinds and reports

@dataclass(frozen=True)
class NormKind:
    """Tagged seminorm selector with its per-kind parameters."""

    tag: str
    beta: float | None = None
    delta: float | None = None
    include_straight: bool = True
    tail: bool = True

    @classmethod
    def half_graph(cls, tail: bool = True) -> "NormKind":
        return cls("HalfGraph", tail=tail)

    @classmethod
    def half_line(cls, tail: bool = True) -> "NormKind":
        return cls("HalfLine", tail=tail)

    @classmethod
    def tilde_half_line(cls) -> "NormKind":
        return cls("TildeHalfLine", tail=False)

    @classmethod
    def integer_graph(cls) -> "NormKind":
        return cls("IntegerGraph", tail=False)

    @classmethod
    def square(cls) -> "NormKind":
        return cls("Square", tail=False)

    @classmethod
    def graph_paper(cls, include_straight: bool = True) -> "NormKind":
        return cls("GraphPaper", include_straight=include_straight, tail=False)

    @classmethod
    def circle(cls) -> "NormKind":
        return cls("Circle", tail=False)

    @classmethod
    def pencil_tilde(cls, delta: float) -> "NormKind":
        if not delta > 0:
            raise BuildError(f"pencil spacing must be positive, got {delta}")
        return cls("PencilTilde", delta=float(delta), tail=False)

    @classmethod
    def h_beta(cls, beta: float) -> "NormKind":
        if not (0.5 < beta < 1.0):
            raise BuildError(f"beta must lie in (1/2, 1), got {beta}")
        return cls("HBeta", beta=float(beta), tail=False)


@dataclass
class NormReport:
    """Squared seminorm value with its quadrature metadata."""

    kind: str
    value: float
    breakdown: dict[str, float]
    resolution: int
    window: float | None = None
    refinement_estimate: float | None = None
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "window": self.window,
            "resolution": self.resolution,
            "refinement_estimate": self.refinement_estimate,
            "breakdown": self.breakdown,
        }


def _pairwise_sum(values: np.ndarray) -> float:
    """Deterministic pairwise reduction in the given canonical order."""
    return float(np.sum(np.asarray(values, dtype=float)))


def _group_edges(f: EdgeFunction, edge_ids) -> list[tuple[np.ndarray, float]]:
    """Stack same-shape edges for batching; groups keyed by (cells, spacing)."""
    groups: dict[tuple[int, float], list[int]] = {}
    for e in edge_ids:
        groups.setdefault((f.n_cells(e), round(f.h(e), 15)), []).append(e)
    out = []
    for (_, h), ids in sorted(groups.items()):
        out.append((np.stack([f.samples[e] for e in ids]), h))
    return out


def _sum_edge_terms(f: EdgeFunction, edge_ids, kernel_for, max_gap=None) -> float:
    parts = []
    for vals, h in _group_edges(f, edge_ids):
        parts.append(_pairwise_sum(_same_edge_batch(vals, h, kernel_for(h), max_gap)))
    return float(np.sum(parts)) if parts else 0.0


def _sum_junction_terms(f: EdgeFunction, junctions) -> float:
    if not junctions:
        return 0.0
    g = f.graph
    ns = {f.n_cells(e) for e in range(g.n_edges)}
    hs = {round(f.h(e), 15) for e in range(g.n_edges)}
    if len(ns) == 1 and len(hs) == 1:
        # uniform resolution: gather all arms with one fancy index
        S = np.stack(f.samples)
        Srev = S[:, ::-1]
        ia = np.array([j.edge_a for j in junctions])
        ib = np.array([j.edge_b for j in junctions])
        ra = np.array([j.reverse_a for j in junctions])
        rb = np.array([j.reverse_b for j in junctions])
        ga = np.where(ra[:, None], Srev[ia], S[ia])
        gb = np.where(rb[:, None], Srev[ib], S[ib])
        return _pairwise_sum(_junction_batch(ga, gb, f.h(0)))
    groups: dict[tuple[int, float], list] = {}
    for j in junctions:
        ga = f.values_from_vertex(j.edge_a, j.reverse_a)
        gb = f.values_from_vertex(j.edge_b, j.reverse_b)
        ha, hb = f.h(j.edge_a), f.h(j.edge_b)
        if abs(ha - hb) > 1e-12 * max(ha, hb):
            raise BuildError("junction pair has mismatched sample spacings")
        m = min(ga.size, gb.size)
        groups.setdefault((m, round(ha, 15)), []).append((ga[:m], gb[:m]))
    parts = []
    for (_, h), pairs in sorted(groups.items()):
        ga = np.stack([p[0] for p in pairs])
        gb = np.stack([p[1] for p in pairs])
        parts.append(_pairwise_sum(_junction_batch(ga, gb, h)))
    return float(np.sum(parts)) if parts else 0.0


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise KindMismatchError(msg)


def _single_line_edge(f: EdgeFunction) -> int:
    _require(
        f.graph.n_edges == 1 and f.graph.edges[0].kind == "segment",
        "this norm kind needs a single-edge line graph",
    )
    return 0


def _linear_l2(ga: np.ndarray, gb: np.ndarray, h: float) -> float:
    """Exact L2^2 of the piecewise-linear interpolant of ga - gb."""
    d = ga - gb
    return float(np.sum(h / 3.0 * (d[:-1] ** 2 + d[:-1] * d[1:] + d[1:] ** 2)))


def seminorm(f: EdgeFunction, kind: NormKind, refine_estimate: bool = False) -> NormReport:
    """Assemble the squared seminorm of the given kind on an edge function."""
    g = f.graph
    p2 = lambda h: _PowerKernel(2.0)
    breakdown: dict[str, float] = {}

    if kind.tag == "HalfGraph":
        breakdown["edges"] = _sum_edge_terms(f, range(g.n_edges), p2)
        breakdown["junctions"] = _sum_junction_terms(f, g.junctions)
        if kind.tail and g.meta.get("open_ends"):
            breakdown["tail"] = _open_end_tail(f)

    elif kind.tag == "HalfLine":
        e = _single_line_edge(f)
        breakdown["edge"] = _sum_edge_terms(f, [e], p2)
        if kind.tail and g.meta.get("open_ends"):
            breakdown["tail"] = _open_end_tail(f)

    elif kind.tag == "TildeHalfLine":
        e = _single_line_edge(f)
        breakdown["edge"] = _sum_edge_terms(f, [e], p2, max_gap=1.0)

    elif kind.tag == "IntegerGraph":
        _require(
            g.n_edges >= 1 and all(abs(e.length - 1.0) < 1e-12 for e in g.edges),
            "IntegerGraph norm needs unit-length edges",
        )
        breakdown["edges"] = _sum_edge_terms(f, range(g.n_edges), p2)
        through = [j for j in g.junctions if j.label == "through"]
        _require(bool(through) or g.n_edges == 1, "IntegerGraph norm needs 'through' junctions")
        breakdown["junctions"] = _sum_junction_terms(f, through)

    elif kind.tag == "Square":
        corners = [j for j in g.junctions if j.label == "corner"]
        _require(g.n_edges == 4 and len(corners) == 4, "Square norm needs the 4-edge square graph")
        breakdown["edges"] = _sum_edge_terms(f, range(4), p2)
        breakdown["junctions"] = _sum_junction_terms(f, corners)

    elif kind.tag == "GraphPaper":
        _require("lattice" in g.meta, "GraphPaper norm needs a graph-paper lattice graph")
        n_h = g.meta["lattice"]["n_horizontal"]
        breakdown["horizontal_edges"] = _sum_edge_terms(f, range(n_h), p2)
        breakdown["vertical_edges"] = _sum_edge_terms(f, range(n_h, g.n_edges), p2)
        cross = [j for j in g.junctions if j.label in ("EN", "WS")]
        breakdown["cross_junctions"] = _sum_junction_terms(f, cross)
        if kind.include_straight:
            straight = [j for j in g.junctions if j.label in ("EW", "NS")]
            breakdown["straight_junctions"] = _sum_junction_terms(f, straight)

    elif kind.tag == "Circle":
        _require(
            g.n_edges == 1 and g.edges[0].kind == "arc",
            "Circle norm needs a single closed circle edge",
        )
        r = g.edges[0].arc_radius
        breakdown["edge"] = _sum_edge_terms(f, [0], lambda h: _ChordKernel(r))

    elif kind.tag == "PencilTilde":
        _require("pencil" in g.meta or not g.junctions, "PencilTilde needs a pencil of lines")
        delta = kind.delta
        order = sorted(range(g.n_edges), key=lambda e: float(g.vertices[g.edges[e].a][1]))
        breakdown["line_terms"] = _sum_edge_terms(f, order, p2, max_gap=delta)
        coupling = []
        for a, b in zip(order[:-1], order[1:]):
            ya = float(g.vertices[g.edges[a].a][1])
            yb = float(g.vertices[g.edges[b].a][1])
            if abs((yb - ya) - delta) > 1e-9 * max(1.0, delta):
                raise KindMismatchError("pencil lines are not at the declared spacing")
            ha, hb = f.h(a), f.h(b)
            if abs(ha - hb) > 1e-12 * max(ha, hb):
                raise BuildError("pencil lines have mismatched sample spacings")
            coupling.append(_linear_l2(f.samples[a], f.samples[b], ha) / delta)
        breakdown["coupling_terms"] = float(np.sum(coupling)) if coupling else 0.0

    elif kind.tag == "HBeta":
        p = 1.0 + 2.0 * kind.beta
        _check_exponent(p)
        breakdown["edges"] = _sum_edge_terms(f, range(g.n_edges), lambda h: _PowerKernel(p))

    else:
        raise KindMismatchError(f"unknown norm kind {kind.tag!r}")

    value = float(sum(breakdown.values()))
    resolution = max(f.n_cells(e) for e in range(g.n_edges)) if g.n_edges else 0
    window = g.window.half_width if g.window is not None else None

    refinement = None
    if refine_estimate:
        if all(f.n_cells(e) % 2 == 0 and f.n_cells(e) >= 4 for e in range(g.n_edges)):
            coarse = EdgeFunction(g, [s[::2] for s in f.samples], continuous=f.continuous)
            v2 = seminorm(coarse, kind, refine_estimate=False).value
            if value != 0 and math.isfinite(value):
                refinement = abs(value - v2) / abs(value)

    return NormReport(
        kind=kind.tag,
        value=value,
        breakdown=breakdown,
        resolution=resolution,
        window=window,
        refinement_estimate=refinement,
    )
