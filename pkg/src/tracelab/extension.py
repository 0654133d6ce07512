"""Extensions of line/graph data into the plane and the plane energy.

The Poisson integral of the piecewise-linear interpolant is evaluated in
closed form: the convolution of a hat function with the Poisson kernel has
arctan/log antiderivatives, so each grid row is one exact weight table plus a
discrete correlation. Outside the sample window the data is continued by its
boundary value and the kernel tail is integrated analytically.

The energy quadrature assembles gradients per grid cell from the four edge
differences (equivalent to averaged one-sided differences), so no stencil
ever differences across the half-plane seam of an extension or across a cell
boundary of a harmonic fill.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import BuildError, SolverError
from .functions import EdgeFunction, PlaneField
from .graphs import Window

__all__ = [
    "EnergyReport",
    "poisson_extend",
    "plane_energy",
    "even_reflection",
    "harmonic_fill_square",
]


@dataclass
class EnergyReport:
    """Squared gradient integral with its quadrature metadata."""

    value: float
    breakdown: dict[str, float]
    spacing: float
    bounds: tuple[float, float, float, float]
    meta: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "spacing": self.spacing,
            "bounds": list(self.bounds),
            "breakdown": self.breakdown,
        }


def _cell_gradient_sq(values: np.ndarray, h: float) -> np.ndarray:
    """|grad F|^2 per grid cell from the four edge differences."""
    dx = np.diff(values, axis=0)
    fx = 0.5 * (dx[:, :-1] + dx[:, 1:]) / h
    dy = np.diff(values, axis=1)
    fy = 0.5 * (dy[:-1, :] + dy[1:, :]) / h
    return fx * fx + fy * fy


def plane_energy(F: PlaneField, include_tail: bool = True) -> EnergyReport:
    """Energy int |grad F|^2 over the grid, cells summed times cell area.

    Fields carrying ``tail_mass`` (Poisson extensions of decaying data) get
    the analytic far-field term mass^2 (pi + 2) / (2 pi^2 R^2), the energy of
    the monopole Poisson kernel outside the square window.
    """
    if F.xs.size < 8 or F.ys.size < 8:
        raise BuildError("plane energy needs at least an 8x8 grid")
    h = F.h
    window_sum = float(np.sum(_cell_gradient_sq(F.values, h))) * h * h
    breakdown = {"window": window_sum}
    if include_tail and F.tail_mass is not None:
        x0, x1, y0, y1 = F.bounds()
        rx, ry = 0.5 * (x1 - x0), 0.5 * (y1 - y0)
        if abs(rx - ry) <= h:
            R = min(rx, ry)
            breakdown["far_field_tail"] = (
                F.tail_mass**2 * (math.pi + 2.0) / (2.0 * math.pi**2 * R * R)
            )
    value = float(sum(breakdown.values()))
    return EnergyReport(value, breakdown, h, F.bounds())


def _poisson_antiderivatives(a: np.ndarray, b: np.ndarray, ay: float):
    """I0 = kernel mass of (a, b); I1 = first moment, for kernel (ay/pi)/(v^2+y^2)."""
    i0 = (np.arctan(b / ay) - np.arctan(a / ay)) / np.pi
    i1 = (ay / (2.0 * np.pi)) * (np.log(b * b + ay * ay) - np.log(a * a + ay * ay))
    return i0, i1


def _hat_halves(u: np.ndarray, hf: float, ay: float):
    """Poisson-kernel integrals against the two halves of a unit hat at 0."""
    i0l, i1l = _poisson_antiderivatives(u - hf, u, ay)
    right = (1.0 - u / hf) * i0l + i1l / hf
    i0r, i1r = _poisson_antiderivatives(u, u + hf, ay)
    left = (1.0 + u / hf) * i0r - i1r / hf
    return right, left  # sources in [c, c+hf] and [c-hf, c] respectively


def poisson_extend(
    f: EdgeFunction,
    spacing: float,
    window: Window | None = None,
) -> PlaneField:
    """Harmonic extension of line data to both half-planes by the Poisson integral.

    F(x, y) = (|y|/pi) int f(x - t) / (t^2 + y^2) dt for the interpolant of f,
    continued by its boundary values outside the window; F(x, 0) = f(x). The
    plane grid must align with the sample grid of f.
    """
    g = f.graph
    if g.n_edges != 1 or g.edges[0].kind != "segment":
        raise BuildError("poisson_extend needs a single-edge line graph")
    e = g.edges[0]
    pa, pb = g.vertices[e.a], g.vertices[e.b]
    if abs(pa[1] - pb[1]) > 1e-12:
        raise BuildError("poisson_extend needs a horizontal line")
    y_line = float(pa[1])
    t0 = float(min(pa[0], pb[0]))
    vals = f.samples[0] if pa[0] <= pb[0] else f.samples[0][::-1]
    hf = f.h(0)
    n_f = vals.size - 1

    if window is None:
        window = g.window
    if window is None:
        raise BuildError("poisson_extend needs a window")
    cx, cy = window.center
    R = window.half_width
    stride = spacing / hf
    if abs(stride - round(stride)) > 1e-9 or round(stride) < 1:
        raise BuildError("plane spacing must be an integer multiple of the sample spacing")
    stride = int(round(stride))
    for name, off in (("x", (cx - R - t0) / hf), ("y", (cy - R - y_line) / spacing)):
        if abs(off - round(off)) > 1e-9:
            raise BuildError(f"plane grid does not align with the line data in {name}")

    n = int(round(2 * R / spacing))
    xs = (cx - R) + spacing * np.arange(n + 1)
    ys = (cy - R) + spacing * np.arange(n + 1)
    jline = int(round((y_line - (cy - R)) / spacing))

    # the constant-continuation tail model needs f flat near the window edges
    spread = float(np.max(vals) - np.min(vals))
    edge = max(2, n_f // 16)
    flatness = max(
        float(np.ptp(vals[: edge + 1])), float(np.ptp(vals[-(edge + 1):]))
    )
    warnings = []
    if spread > 0 and flatness > 0.05 * spread:
        warnings.append("data still varies at the window edges; tail model is crude")

    # u-lattice covering x_i - t_k at spacing hf
    k0 = int(round((xs[0] - t0) / hf)) - n_f
    n_u = n * stride + n_f + 1
    u = (k0 + np.arange(n_u)) * hf
    pick = stride * np.arange(n + 1) + n_f  # conv index of x_i

    out = np.empty((n + 1, n + 1))
    rows: dict[int, np.ndarray] = {}
    for j in range(n + 1):
        if j == jline:
            continue
        dy_cells = abs(j - jline)
        if dy_cells in rows:
            out[:, j] = rows[dy_cells]
            continue
        ay = dy_cells * spacing
        right, left = _hat_halves(u, hf, ay)
        W = right + left
        conv = fftconvolve(W, vals)
        row = conv[pick]
        # constant continuation beyond the sample window on both sides
        ghost_l = xs - (t0 - hf)
        ghost_r = xs - (t0 + (n_f + 1) * hf)
        row += vals[0] * (0.5 - np.arctan(ghost_l / ay) / np.pi)
        row += vals[0] * _hat_halves(ghost_l, hf, ay)[0]
        row += vals[-1] * (0.5 + np.arctan(ghost_r / ay) / np.pi)
        row += vals[-1] * _hat_halves(ghost_r, hf, ay)[1]
        rows[dy_cells] = row
        out[:, j] = row
    if 0 <= jline <= n:
        out[:, jline] = vals[pick - n_f]

    mass = hf * (np.sum(vals) - 0.5 * (vals[0] + vals[-1]))
    field_meta = {"warnings": warnings} if warnings else {}
    return PlaneField(xs, ys, out, seam_y=y_line, tail_mass=float(mass), meta=field_meta)


def even_reflection(F: PlaneField) -> PlaneField:
    """Reflect a field given on y >= 0 to the full window: F(x, -y) = F(x, y)."""
    if abs(F.ys[0]) > 1e-12:
        raise BuildError("even_reflection needs a field on y >= 0 with y=0 on the grid")
    ys = np.concatenate([-F.ys[:0:-1], F.ys])
    values = np.concatenate([F.values[:, :0:-1], F.values], axis=1)
    return PlaneField(F.xs, ys, values, seam_y=0.0)


# ---------------------------------------------------------------------------
# discrete harmonic fill

def _laplace_neighbor_sum(full: np.ndarray) -> np.ndarray:
    return full[:, :-2, 1:-1] + full[:, 2:, 1:-1] + full[:, 1:-1, :-2] + full[:, 1:-1, 2:]


def harmonic_fill_batch(grids: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Solve the 5-point Laplace equation on each grid's interior.

    ``grids`` has shape (B, M+1, M+1) with boundary rows/columns holding the
    Dirichlet data; interiors are overwritten by the discrete harmonic fill.
    Conjugate gradient from a zero initial guess, dot products taken as plain
    pairwise sums so results do not depend on worker threads.
    """
    grids = np.array(grids, dtype=float)
    B, m1, m2 = grids.shape
    if m1 != m2 or m1 < 3:
        raise BuildError("harmonic fill needs square grids of at least 3x3")

    bc = grids.copy()
    bc[:, 1:-1, 1:-1] = 0.0
    rhs = _laplace_neighbor_sum(bc)
    scale = max(1.0, float(np.max(np.abs(rhs)))) if rhs.size else 1.0

    def apply_op(u):
        full = np.zeros_like(grids)
        full[:, 1:-1, 1:-1] = u
        return 4.0 * u - _laplace_neighbor_sum(full)

    u = np.zeros_like(rhs)
    r = rhs - apply_op(u)
    d = r.copy()
    rs = np.sum(r * r, axis=(1, 2))
    n_unknowns = (m1 - 2) * (m1 - 2)
    max_iter = 4 * n_unknowns + 200
    for _ in range(max_iter):
        if float(np.max(np.abs(r))) <= tol * scale:
            break
        Ad = apply_op(d)
        dAd = np.sum(d * Ad, axis=(1, 2))
        alpha = np.where(dAd > 0, rs / np.where(dAd > 0, dAd, 1.0), 0.0)
        u = u + alpha[:, None, None] * d
        r = r - alpha[:, None, None] * Ad
        rs_new = np.sum(r * r, axis=(1, 2))
        beta = np.where(rs > 0, rs_new / np.where(rs > 0, rs, 1.0), 0.0)
        d = r + beta[:, None, None] * d
        rs = rs_new
    residual = float(np.max(np.abs(r)))
    if residual > 1e-10 * scale:
        raise SolverError(f"harmonic fill did not converge: residual {residual:.3e}")
    grids[:, 1:-1, 1:-1] = u
    return grids


def harmonic_fill_square(boundary: EdgeFunction, spacing: float | None = None) -> PlaneField:
    """Discrete harmonic (energy minimizing) fill of a square from its edge data.

    The boundary function lives on the 4-edge square graph with matching
    per-edge resolution; corner samples must agree. The fill grid spacing
    defaults to the boundary sample spacing and must match it.
    """
    g = boundary.graph
    if g.n_edges != 4 or (g.family is not None and g.family.tag != "Square"):
        raise BuildError("harmonic_fill_square needs a function on the square graph")
    delta = g.edges[0].length
    ns = {boundary.n_cells(e) for e in range(4)}
    if len(ns) != 1:
        raise BuildError("square boundary needs one common resolution")
    m = ns.pop()
    if spacing is not None and abs(spacing - delta / m) > 1e-12 * delta:
        raise BuildError("fill spacing must equal the boundary sample spacing")
    h = delta / m

    bottom, right, top, left = boundary.samples
    corner_pairs = [
        (bottom[-1], right[0]),
        (right[-1], top[-1]),
        (top[0], left[-1]),
        (left[0], bottom[0]),
    ]
    scale = max(1.0, max(abs(v) for s in boundary.samples for v in (s.max(), s.min())))
    for va, vb in corner_pairs:
        if abs(va - vb) > 1e-9 * scale:
            raise BuildError("square boundary data is discontinuous at a corner")

    grid = np.zeros((1, m + 1, m + 1))
    grid[0, :, 0] = bottom
    grid[0, m, :] = right
    grid[0, :, m] = top
    grid[0, 0, :] = left
    filled = harmonic_fill_batch(grid)[0]

    x0, y0 = g.vertices[g.edges[0].a]
    xs = x0 + h * np.arange(m + 1)
    ys = y0 + h * np.arange(m + 1)
    return PlaneField(xs, ys, filled)


def laplacian_residual(F: PlaneField) -> float:
    """Max-norm 5-point Laplacian residual over interior points (solver check)."""
    v = F.values
    r = 4.0 * v[1:-1, 1:-1] - (v[:-2, 1:-1] + v[2:, 1:-1] + v[1:-1, :-2] + v[1:-1, 2:])
    return float(np.max(np.abs(r))) if r.size else 0.0
