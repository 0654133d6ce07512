import numpy as np
import pytest

from tracelab.errors import BuildError
from tracelab.functions import (
    FunctionFamily,
    PlaneField,
    edge_function_from_samples,
    family_from_name,
    read_samples_csv,
    sample_on_graph,
    sample_plane,
    trace_plane_to_graph,
    write_samples_csv,
)
from tracelab.graphs import GraphFamily, Window, build_graph


def test_constant_family_samples_equal():
    g = build_graph(GraphFamily.graph_paper(1.0), Window(2.0))
    f = sample_on_graph(FunctionFamily.constant(2.5), g, 8)
    for s in f.samples:
        assert np.all(s == 2.5)


def test_gaussian_samples_match_direct_evaluation():
    g = build_graph(GraphFamily.graph_paper(1.0), Window(2.0))
    f = sample_on_graph(FunctionFamily.gaussian(), g, 16)
    for e_idx in (0, 7, g.n_edges - 1):
        e = g.edges[e_idx]
        x = np.linspace(0, e.length, 17)
        pts = e.points(g, x)
        direct = np.exp(-np.pi * (pts[:, 0] ** 2 + pts[:, 1] ** 2))
        assert np.array_equal(f.samples[e_idx], direct)
        assert f.samples[e_idx].size == 17


def test_radial_power_on_shifted_line():
    # on the line y = pi n the family becomes (1 + pi^2 n^2 + x^2)^(-alpha)
    n = 3
    g = build_graph(GraphFamily.interval_line(), Window(4.0, (0.0, np.pi * n)))
    f = sample_on_graph(FunctionFamily.radial_power(0.25), g, 64)
    x = np.linspace(-4, 4, 65)
    expect = (1 + np.pi**2 * n**2 + x**2) ** -0.25
    assert np.allclose(f.samples[0], expect, rtol=0, atol=1e-15)


def test_trace_coordinate_on_axis():
    F = sample_plane(FunctionFamily.coordinate_x(), Window(1.0), 1 / 16)
    g = build_graph(GraphFamily.interval_line(), Window(1.0))
    f = trace_plane_to_graph(F, g)
    assert np.allclose(f.samples[0], np.linspace(-1, 1, 33), atol=1e-14)


def test_trace_saddle_on_graph_paper():
    # on the horizontal edge at height k the trace of x^2 - y^2 is x^2 - k^2
    F = sample_plane(FunctionFamily.harmonic2d(), Window(2.0), 1 / 8)
    g = build_graph(GraphFamily.graph_paper(1.0), Window(2.0))
    f = trace_plane_to_graph(F, g)
    from tracelab.graphs import graph_paper_edge_indices

    h_idx, _ = graph_paper_edge_indices(g)
    for (j, k) in [(0, 0), (-2, 1), (1, -2)]:
        e = h_idx[(j, k)]
        x = j + np.linspace(0, 1, f.n_cells(e) + 1)
        assert np.allclose(f.samples[e], x**2 - k**2, atol=1e-12)


def test_trace_equals_sampling_on_aligned_grids():
    F = sample_plane(FunctionFamily.gaussian(), Window(2.0), 2**-6)
    g = build_graph(GraphFamily.graph_paper(2**-4), Window(2.0))
    traced = trace_plane_to_graph(F, g)
    direct = sample_on_graph(FunctionFamily.gaussian(), g, traced.n_cells(0))
    for a, b in zip(traced.samples, direct.samples):
        assert np.array_equal(a, b)


def test_trace_interpolation_error_second_order():
    # off-grid sample points are bilinearly interpolated with O(h^2) error
    g = build_graph(GraphFamily.graph_paper(2**-2), Window(1.0))
    errs = []
    for h in (2**-5, 2**-6, 2**-7):
        F = sample_plane(FunctionFamily.gaussian(), Window(1.0), h)
        traced = trace_plane_to_graph(F, g, samples_per_edge=3)
        direct = sample_on_graph(FunctionFamily.gaussian(), g, 3)
        errs.append(
            max(
                float(np.max(np.abs(a - b)))
                for a, b in zip(traced.samples, direct.samples)
            )
        )
    assert errs[0] / errs[1] > 3.0
    assert errs[1] / errs[2] > 3.0


def test_continuity_at_junctions():
    g = build_graph(GraphFamily.graph_paper(0.5), Window(1.0))
    for fam in (FunctionFamily.gaussian(), FunctionFamily.cauchy(), FunctionFamily.harmonic2d()):
        f = sample_on_graph(fam, g, 8)
        jumps = f.junction_jumps()
        assert np.all(jumps == 0.0)


def test_custom_samples_mismatch_rejected():
    g = build_graph(GraphFamily.square(1.0), Window(1.0))
    with pytest.raises(BuildError):
        edge_function_from_samples(g, [np.zeros(5)] * 3)
    with pytest.raises(BuildError):
        edge_function_from_samples(g, [np.zeros(5)] * 3 + [np.zeros(2)])


def test_trace_outside_window_rejected():
    F = sample_plane(FunctionFamily.gaussian(), Window(1.0), 1 / 8)
    g = build_graph(GraphFamily.interval_line(), Window(2.0))
    with pytest.raises(BuildError, match="edge 0"):
        trace_plane_to_graph(F, g)


def test_samples_csv_roundtrip(tmp_path):
    g = build_graph(GraphFamily.square(1.0), Window(1.0))
    f = sample_on_graph(FunctionFamily.gaussian(), g, 8)
    path = tmp_path / "samples.csv"
    write_samples_csv(f, path)
    back = read_samples_csv(g, path, continuous=True)
    for a, b in zip(f.samples, back.samples):
        assert np.array_equal(a, b)


def test_plane_field_invariants():
    with pytest.raises(BuildError):
        PlaneField(np.arange(3.0), np.arange(3.0), np.full((3, 3), np.nan))
    with pytest.raises(BuildError):
        sample_plane(FunctionFamily.gaussian(), Window(1.0), 0.3)


def test_family_lookup():
    assert family_from_name("gaussian").tag == "Gaussian"
    assert family_from_name("radial-power", alpha=0.5).alpha == 0.5
    with pytest.raises(BuildError):
        family_from_name("radial-power")
    with pytest.raises(BuildError):
        family_from_name("nope")


def test_smooth_step_values():
    fam = FunctionFamily.smooth_step()
    x = np.array([-1.0, 0.0, 0.25, 0.5, 1.0, 2.0])
    vals = fam.evaluate(x, 0 * x)
    assert np.allclose(vals, [0.0, 0.0, 3 * 0.0625 - 2 * 0.015625, 0.5, 1.0, 1.0])


def test_every_family_broadcasts_on_plane_grids():
    fams = [
        FunctionFamily.constant(2.0),
        FunctionFamily.gaussian(),
        FunctionFamily.cauchy(),
        FunctionFamily.radial_power(0.5),
        FunctionFamily.smooth_step(),
        FunctionFamily.harmonic2d(),
        FunctionFamily.coordinate_x(),
        FunctionFamily.coordinate_y(),
    ]
    for fam in fams:
        F = sample_plane(fam, Window(1.0), 1 / 8)
        assert F.values.shape == (17, 17)
