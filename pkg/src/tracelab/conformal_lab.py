"""Trace norms transported by conformal maps: the height-pi strip, the first
quadrant, and the circle, plus the strip counterexample demonstration.

The strip norm splits into two one-line tilde norms and an L^2 coupling; the
transported form replaces the tilde kernel by 1/(4 sinh^2((x-y)/2)), whose
exponential off-diagonal decay is what makes the two equivalent. The
counterexample runs the smooth step through both the truncated full kernel
(log-divergent in the window) and the tilde kernel (stable), demonstrating
that finite strip energy does not extend to finite plane energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BuildError
from .functions import EdgeFunction, FunctionFamily, sample_on_graph
from .graphs import GraphFamily, Window, build_graph
from .seminorms import (
    NormKind,
    _GL_NODES,
    _GL_WEIGHTS,
    _SinhKernel,
    _junction_batch,
    _linear_l2,
    _same_edge_batch,
    seminorm,
)

__all__ = [
    "StripTrace",
    "strip_trace_norm",
    "sinh_kernel_norm",
    "quadrant_trace_norm",
    "counterexample_growth",
]


@dataclass
class StripTrace:
    """Traces of a strip function on the two boundary lines (common grid)."""

    lower: EdgeFunction
    upper: EdgeFunction

    def __post_init__(self):
        gl, gu = self.lower.graph, self.upper.graph
        if gl.n_edges != 1 or gu.n_edges != 1:
            raise BuildError("strip traces need single-line graphs")
        if self.lower.n_cells(0) != self.upper.n_cells(0) or abs(
            self.lower.h(0) - self.upper.h(0)
        ) > 1e-12 * self.lower.h(0):
            raise BuildError("strip traces need a common window and resolution")


def strip_trace_norm(t: StripTrace) -> tuple[float, float, float]:
    """(tilde norm of lower, tilde norm of upper, L2^2 of their difference)."""
    v0 = seminorm(t.lower, NormKind.tilde_half_line()).value
    v1 = seminorm(t.upper, NormKind.tilde_half_line()).value
    l2 = _linear_l2(t.lower.samples[0], t.upper.samples[0], t.lower.h(0))
    return (v0, v1, l2)


def sinh_kernel_norm(f: EdgeFunction) -> float:
    """Double integral with kernel 1/(4 sinh^2((x-y)/2)) on a line function."""
    g = f.graph
    if g.n_edges != 1 or g.edges[0].kind != "segment":
        raise BuildError("sinh_kernel_norm needs a single-line graph")
    return float(_same_edge_batch(f.samples[0][None, :], f.h(0), _SinhKernel())[0])


def _quadrant_weighted_integral(values: np.ndarray, h: float) -> float:
    """int int |f(x)-f(y)|^2 / |x-y|^2 * xy/(x+y)^2 over [0, L]^2.

    The position-dependent weight breaks translation invariance, so cell
    pairs are summed per offset with the weight at the quadrature nodes; on
    diagonal cells the |x-y|^2 factors cancel against the linear interpolant
    and the remaining smooth integrand is handled by the same Gauss rule.
    """
    v = np.asarray(values, dtype=float)
    v = v - v.mean()
    N = v.size - 1
    g = _GL_NODES
    ww = np.outer(_GL_WEIGHTS, _GL_WEIGHTS) * h * h
    V = v[:-1, None] * (1.0 - g) + v[1:, None] * g      # (N, 4)
    X = (np.arange(N)[:, None] + g[None, :]) * h          # node positions
    slopes = np.diff(v) / h

    # diagonal cells: integrand slope^2 * xy/(x+y)^2, smooth
    xa = X[:, :, None]
    ya = X[:, None, :]
    wdiag = xa * ya / ((xa + ya) ** 2)
    out = float(np.sum((slopes**2)[:, None, None] * wdiag * ww[None, :, :]))

    for d in range(1, N):
        xi = X[:-d, :, None]
        yj = X[d:, None, :]
        w = (xi * yj) / (((xi + yj) ** 2) * ((xi - yj) ** 2))
        D = V[:-d, :, None] - V[d:, None, :]
        out += 2.0 * float(np.sum(D * D * w * ww[None, :, :]))
    return out


def quadrant_trace_norm(
    f0: EdgeFunction, f1: EdgeFunction
) -> tuple[float, float, float]:
    """The three transported quadrant integrals for half-line traces.

    Returns the two weighted double integrals (weight xy/(x+y)^2 against the
    |x-y|^{-2} kernel, each bounded by a quarter of the unweighted integral)
    and the junction term int |f0 - f1|^2 dx/x, which is +inf unless the
    traces agree at the corner. Prefactors of the conformal identity are left
    to the caller.
    """
    for f in (f0, f1):
        if f.graph.n_edges != 1 or f.graph.edges[0].kind != "segment":
            raise BuildError("quadrant traces need single-line graphs")
    if f0.n_cells(0) != f1.n_cells(0) or abs(f0.h(0) - f1.h(0)) > 1e-12 * f0.h(0):
        raise BuildError("quadrant traces need matching grids")
    h = f0.h(0)
    d0 = _quadrant_weighted_integral(f0.samples[0], h)
    d1 = _quadrant_weighted_integral(f1.samples[0], h)
    junction = float(_junction_batch(f0.samples[0][None, :], f1.samples[0][None, :], h)[0])
    return (d0, d1, junction)


def counterexample_growth(
    r_values: list[float], samples_per_unit: int = 32
) -> list[dict]:
    """Smooth-step norms per window: the truncated full kernel grows like
    2 log R while the tilde norm stabilizes."""
    rs = [float(r) for r in r_values]
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise BuildError("window list must be increasing")
    fam = FunctionFamily.smooth_step()
    rows = []
    for r in rs:
        g = build_graph(GraphFamily.interval_line(), Window(r))
        n = int(round(2 * r * samples_per_unit))
        f = sample_on_graph(fam, g, n)
        full = seminorm(f, NormKind.half_line(tail=False)).value
        tilde = seminorm(f, NormKind.tilde_half_line()).value
        rows.append(
            {
                "window": r,
                "full_norm2": full,
                "tilde_norm2": tilde,
                "resolution": n,
            }
        )
    return rows


def growth_slope(rows: list[dict]) -> float:
    """Least-squares slope of the truncated full norm against log R."""
    x = np.log([r["window"] for r in rows])
    y = np.array([r["full_norm2"] for r in rows])
    return float(np.polyfit(x, y, 1)[0])
