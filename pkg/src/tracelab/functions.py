"""Scalar functions on metric graphs and on the plane.

Functions on graphs are piecewise linear between uniform per-edge samples;
every quadrature downstream integrates this interpolant. Plane fields are
values on a uniform 2D grid. Builtin analytic families cover the test
functions used throughout the experiments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import BuildError
from .graphs import MetricGraph, Window


@dataclass(frozen=True)
class FunctionFamily:
    """Analytic plane function F(x, y), evaluated through edge embeddings on graphs."""

    tag: str
    alpha: float | None = None
    center: tuple[float, float] = (0.0, 0.0)

    @classmethod
    def constant(cls, value: float = 1.0) -> "FunctionFamily":
        return cls("Constant", alpha=float(value))

    @classmethod
    def gaussian(cls, center=(0.0, 0.0)) -> "FunctionFamily":
        return cls("Gaussian", center=tuple(center))

    @classmethod
    def cauchy(cls) -> "FunctionFamily":
        return cls("Cauchy")

    @classmethod
    def radial_power(cls, alpha: float) -> "FunctionFamily":
        if not alpha > 0:
            raise BuildError(f"RadialPower needs alpha > 0, got {alpha}")
        return cls("RadialPower", alpha=float(alpha))

    @classmethod
    def smooth_step(cls) -> "FunctionFamily":
        return cls("SmoothStep")

    @classmethod
    def harmonic2d(cls) -> "FunctionFamily":
        return cls("Harmonic2D")

    @classmethod
    def coordinate_x(cls) -> "FunctionFamily":
        return cls("CoordinateX")

    @classmethod
    def coordinate_y(cls) -> "FunctionFamily":
        return cls("CoordinateY")

    def evaluate(self, x, y):
        x, y = np.broadcast_arrays(
            np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        )
        cx, cy = self.center
        if self.tag == "Constant":
            return np.full(x.shape, self.alpha)
        if self.tag == "Gaussian":
            return np.exp(-np.pi * ((x - cx) ** 2 + (y - cy) ** 2))
        if self.tag == "Cauchy":
            return 1.0 / (1.0 + x**2 + y**2)
        if self.tag == "RadialPower":
            return (1.0 + x**2 + y**2) ** (-self.alpha)
        if self.tag == "SmoothStep":
            t = np.clip(x, 0.0, 1.0)
            return 3 * t**2 - 2 * t**3
        if self.tag == "Harmonic2D":
            return x**2 - y**2
        if self.tag == "CoordinateX":
            return x + 0.0 * y
        if self.tag == "CoordinateY":
            return y + 0.0 * x
        raise BuildError(f"unknown function family {self.tag!r}")


def family_from_name(name: str, alpha: float | None = None) -> FunctionFamily:
    """CLI-facing lookup by lowercase family name."""
    name = name.lower().replace("_", "-")
    table = {
        "constant": FunctionFamily.constant,
        "gaussian": FunctionFamily.gaussian,
        "cauchy": FunctionFamily.cauchy,
        "smooth-step": FunctionFamily.smooth_step,
        "harmonic2d": FunctionFamily.harmonic2d,
        "coordinate-x": FunctionFamily.coordinate_x,
        "coordinate-y": FunctionFamily.coordinate_y,
    }
    if name == "radial-power":
        if alpha is None:
            raise BuildError("radial-power requires --alpha")
        return FunctionFamily.radial_power(alpha)
    if name not in table:
        raise BuildError(f"unknown function family {name!r}")
    return table[name]()


#: families that decay at infinity; used by the equivalence-band experiments
def decaying_line_families() -> list[FunctionFamily]:
    return [
        FunctionFamily.gaussian(),
        FunctionFamily.gaussian(center=(1.0, 0.0)),
        FunctionFamily.cauchy(),
        FunctionFamily.radial_power(0.75),
    ]


def decaying_plane_families() -> list[FunctionFamily]:
    return [
        FunctionFamily.gaussian(),
        FunctionFamily.cauchy(),
        FunctionFamily.radial_power(0.75),
        FunctionFamily.radial_power(1.5),
    ]


@dataclass
class EdgeFunction:
    """Per-edge uniform samples of a scalar function on a metric graph."""

    graph: MetricGraph
    samples: list[np.ndarray]
    continuous: bool = True

    def __post_init__(self):
        if len(self.samples) != self.graph.n_edges:
            raise BuildError(
                f"sample arrays ({len(self.samples)}) do not match edge count "
                f"({self.graph.n_edges})"
            )
        self.samples = [np.asarray(s, dtype=float) for s in self.samples]
        for i, s in enumerate(self.samples):
            if s.ndim != 1 or s.size < 3:
                raise BuildError(f"edge {i}: need at least 3 samples (N >= 2), got {s.size}")

    def n_cells(self, e: int) -> int:
        return self.samples[e].size - 1

    def h(self, e: int) -> float:
        return self.graph.edges[e].length / self.n_cells(e)

    def values_from_vertex(self, e: int, reverse: bool) -> np.ndarray:
        return self.samples[e][::-1] if reverse else self.samples[e]

    def junction_jumps(self) -> np.ndarray:
        """|f(e(0)) - f(e'(0))| over all junction pairs (empty graph -> empty)."""
        out = []
        for j in self.graph.junctions:
            fa = self.values_from_vertex(j.edge_a, j.reverse_a)[0]
            fb = self.values_from_vertex(j.edge_b, j.reverse_b)[0]
            out.append(abs(fa - fb))
        return np.asarray(out)


def sample_on_graph(fam: FunctionFamily, g: MetricGraph, n: int) -> EdgeFunction:
    """Evaluate an analytic family at each edge grid point via the embedding."""
    if n < 2:
        raise BuildError(f"resolution must be >= 2, got {n}")
    samples = []
    for e in g.edges:
        x = np.linspace(0.0, e.length, n + 1)
        pts = e.points(g, x)
        samples.append(fam.evaluate(pts[:, 0], pts[:, 1]))
    return EdgeFunction(g, samples, continuous=True)


def edge_function_from_samples(
    g: MetricGraph, samples: list[np.ndarray], continuous: bool = False
) -> EdgeFunction:
    if len(samples) != g.n_edges:
        raise BuildError(
            f"custom samples: got {len(samples)} arrays for {g.n_edges} edges"
        )
    return EdgeFunction(g, samples, continuous=continuous)


@dataclass
class PlaneField:
    """Uniform-grid samples of F(x, y): values[i, j] = F(xs[i], ys[j]).

    ``seam_y`` marks a horizontal line across which the gradient may be
    discontinuous (a Poisson extension is harmonic in each open half-plane
    only); the energy quadrature never differences across it. ``tail_mass``
    is the interpolant integral of the boundary line data for extensions of
    decaying functions, used for the analytic far-field energy estimate.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    seam_y: float | None = None
    tail_mass: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.xs.size, self.ys.size):
            raise BuildError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.xs.size}, {self.ys.size})"
            )
        if not np.isfinite(self.values).all():
            raise BuildError("plane field contains non-finite values")

    @property
    def h(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def bounds(self) -> tuple[float, float, float, float]:
        return float(self.xs[0]), float(self.xs[-1]), float(self.ys[0]), float(self.ys[-1])

    def to_csv(self, path) -> None:
        """Plot-data export: header comments then (x, y, value) triplets."""
        x0, x1, y0, y1 = self.bounds()
        with open(path, "w", newline="") as fh:
            fh.write(f"# bounds={x0},{x1},{y0},{y1}\n")
            fh.write(f"# spacing={self.h}\n")
            w = csv.writer(fh)
            w.writerow(["x", "y", "value"])
            for i, x in enumerate(self.xs):
                for j, y in enumerate(self.ys):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(self.values[i, j]))])


def sample_plane(fam: FunctionFamily, window: Window, h: float) -> PlaneField:
    """Sample an analytic family on the uniform grid of a square window."""
    cx, cy = window.center
    r = window.half_width
    n = 2 * r / h
    if abs(n - round(n)) > 1e-9:
        raise BuildError(f"grid spacing {h} does not divide the window exactly")
    n = int(round(n))
    xs = cx - r + h * np.arange(n + 1)
    ys = cy - r + h * np.arange(n + 1)
    vals = fam.evaluate(xs[:, None], ys[None, :])
    return PlaneField(xs, ys, vals)


def _grid_index(coords: np.ndarray, x0: float, h: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    t = (coords - x0) / h
    i0 = np.clip(np.floor(t).astype(int), 0, n - 2)
    return i0, t - i0


def _bilinear(F: PlaneField, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    x0, _, y0, _ = F.bounds()
    h = F.h
    i0, tx = _grid_index(px, x0, h, F.xs.size)
    j0, ty = _grid_index(py, y0, h, F.ys.size)
    return (
        F.values[i0, j0] * (1 - tx) * (1 - ty)
        + F.values[i0 + 1, j0] * tx * (1 - ty)
        + F.values[i0, j0 + 1] * (1 - tx) * ty
        + F.values[i0 + 1, j0 + 1] * tx * ty
    )


def _check_inside(F: PlaneField, px, py, edge_label) -> None:
    x0, x1, y0, y1 = F.bounds()
    pad = 1e-9 * max(1.0, F.h)
    if (
        px.min() < x0 - pad
        or px.max() > x1 + pad
        or py.min() < y0 - pad
        or py.max() > y1 + pad
    ):
        raise BuildError(f"edge {edge_label} leaves the plane field window")


def trace_plane_to_graph(
    F: PlaneField, g: MetricGraph, samples_per_edge: int | None = None
) -> "EdgeFunction":
    """Bilinear interpolation of F at each edge grid point.

    Exact (no interpolation) when the edge grids align with the plane grid,
    which is the case for graph-paper traces at scales that the grid spacing
    divides. Default resolution puts edge samples on the plane grid. Straight
    edges of a common resolution and length are interpolated in one batch.
    """
    h = F.h
    samples: list = [None] * g.n_edges
    seg_groups: dict[tuple[int, float], list[int]] = {}
    for idx, e in enumerate(g.edges):
        if samples_per_edge is None:
            n = max(2, int(round(e.length / h)))
        else:
            n = samples_per_edge
        if e.kind == "segment":
            seg_groups.setdefault((n, e.length), []).append(idx)
        else:
            x = np.linspace(0.0, e.length, n + 1)
            pts = e.points(g, x)
            _check_inside(F, pts[:, 0], pts[:, 1], idx)
            samples[idx] = _bilinear(F, pts[:, 0], pts[:, 1])
    for (n, length), ids in seg_groups.items():
        # same arithmetic as Edge.points so shared grid points agree exactly
        t = np.linspace(0.0, length, n + 1) / length
        va = g.vertices[[g.edges[i].a for i in ids]]
        vb = g.vertices[[g.edges[i].b for i in ids]]
        px = va[:, 0, None] * (1.0 - t) + vb[:, 0, None] * t
        py = va[:, 1, None] * (1.0 - t) + vb[:, 1, None] * t
        x0, x1, y0, y1 = F.bounds()
        pad = 1e-9 * max(1.0, h)
        bad = (
            (px.min(axis=1) < x0 - pad)
            | (px.max(axis=1) > x1 + pad)
            | (py.min(axis=1) < y0 - pad)
            | (py.max(axis=1) > y1 + pad)
        )
        if bad.any():
            raise BuildError(
                f"edge {ids[int(np.argmax(bad))]} leaves the plane field window"
            )
        vals = _bilinear(F, px, py)
        for row, idx in enumerate(ids):
            samples[idx] = vals[row]
    return EdgeFunction(g, samples, continuous=True)


def write_samples_csv(f: EdgeFunction, path) -> None:
    """CSV export: one row per sample, (edge index, parameter, value)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge", "parameter", "value"])
        for e, s in enumerate(f.samples):
            hs = f.h(e)
            for i, v in enumerate(s):
                w.writerow([e, repr(i * hs), repr(float(v))])


def read_samples_csv(g: MetricGraph, path, continuous: bool = False) -> EdgeFunction:
    rows: dict[int, list[float]] = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:3] != ["edge", "parameter", "value"]:
            raise BuildError(f"unexpected samples CSV header {header!r}")
        for row in r:
            rows.setdefault(int(row[0]), []).append(float(row[2]))
    if sorted(rows) != list(range(g.n_edges)):
        raise BuildError("samples CSV does not cover every edge exactly once")
    return EdgeFunction(g, [np.array(rows[e]) for e in range(g.n_edges)], continuous)
