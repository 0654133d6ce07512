import numpy as np
import pytest

from tracelab.errors import BuildError, ConsistencyError
from tracelab.extension import plane_energy
from tracelab.functions import FunctionFamily, sample_plane, trace_plane_to_graph
from tracelab.gp_lab import (
    localized_compare,
    pencil_profile,
    reconstruct_from_traces,
    trace_profile,
)
from tracelab.graphs import GraphFamily, Window, build_graph


def _field(fam=None, R=4.0, h=2**-5):
    return sample_plane(fam or FunctionFamily.gaussian(), Window(R), h)


def _trace_levels(F, m, levels, R):
    out = []
    for n in sorted(set(levels), reverse=True):
        g = build_graph(GraphFamily.graph_paper(float(m) ** n), Window(R))
        out.append(trace_plane_to_graph(F, g))
    return out


def test_gaussian_profile_bounded():
    F = _field()
    prof = trace_profile(F, 2, [0, -1, -2])
    assert all(v > 0 and np.isfinite(v) for v in prof.norms2)
    assert max(prof.norms2) / min(prof.norms2) <= 10.0
    assert prof.energy > 0
    rows = prof.rows()
    assert rows[0]["n"] == 0 and rows[-1]["n"] == -2
    assert all("resolution" in r and "window" in r for r in rows)


def test_constant_profile_zero():
    F = _field(FunctionFamily.constant(1.0))
    prof = trace_profile(F, 2, [0, -1])
    assert all(v == 0.0 for v in prof.norms2)


def test_coordinate_profile_closed_form():
    # F = x at delta = 1 on the R = 2 window: 66 from the per-edge and
    # junction closed forms (direct quadrature oracle in test_seminorms)
    F = _field(FunctionFamily.coordinate_x(), R=2.0, h=2**-4)
    prof = trace_profile(F, 2, [0])
    assert abs(prof.norms2[0] - 66.0) < 1e-9


def test_level_guards():
    F = _field()
    with pytest.raises(BuildError):
        trace_profile(F, 1, [0])
    with pytest.raises(BuildError):
        trace_profile(F, 2, [-8])  # finer than two grid spacings
    with pytest.raises(BuildError):
        trace_profile(F, 2, [])


def test_reconstruct_linear_exact():
    F = _field(FunctionFamily.coordinate_x(), R=2.0, h=2**-4)
    traces = _trace_levels(F, 2, [0, -1], 2.0)
    field, rep, info = reconstruct_from_traces(traces)
    assert np.max(np.abs(field.values - field.xs[:, None])) < 1e-10
    assert abs(rep.value - 16.0) < 1e-9  # |grad x|^2 over the 4x4 window
    assert info["sup"] > 0


def test_reconstruct_gaussian_energy_band():
    F = _field()
    traces = _trace_levels(F, 2, [0, -1, -2], 4.0)
    field, rep, info = reconstruct_from_traces(traces)
    original = plane_energy(F).value
    assert 1 / 5 <= rep.value / original <= 5
    # energy additivity: the report total is exactly the per-square sum
    per_square = rep.meta["per_square"]
    assert rep.value == float(np.sum(per_square))
    assert abs(plane_energy(field).value / rep.value - 1) < 1e-12


def test_reconstruct_roundtrip_norms():
    F = _field()
    levels = [0, -1, -2]
    traces = _trace_levels(F, 2, levels, 4.0)
    field, _, info = reconstruct_from_traces(traces)
    prof = trace_profile(field, 2, levels)
    assert np.allclose(prof.norms2, info["level_norms2"], rtol=1e-12, atol=0)


def test_reconstruct_rejects_perturbed_vertex():
    F = _field()
    traces = _trace_levels(F, 2, [0, -1], 4.0)
    traces[0].samples[3][0] += 1e-9
    with pytest.raises(ConsistencyError):
        reconstruct_from_traces(traces)


def test_nesting_consistency_of_traces():
    # T_n applied after a finer trace reproduces the coarse trace exactly
    F = _field()
    coarse, fine = _trace_levels(F, 2, [0, -2], 4.0)
    from tracelab.gp_lab import _check_consistency

    _check_consistency(coarse, fine, pair="(1, 1/4)")


def test_localized_full_region_matches_global():
    F = _field(R=2.0, h=2**-4)
    levels = [0, -1]
    comp = localized_compare(F, Window(2.0), 2, levels)
    prof = trace_profile(F, 2, levels)
    assert np.allclose(comp.norms2, prof.norms2, rtol=1e-12)
    assert abs(comp.energy_local / prof.energy - 1) < 1e-12


def test_localized_subregion_band():
    F = _field()
    comp = localized_compare(F, Window(1.0), 2, [0, -1, -2])
    assert comp.energy_local > 0
    assert comp.sup_local > 0
    assert 0.01 < comp.ratio < 100


def test_localized_constant_zero():
    F = _field(FunctionFamily.constant(2.0), R=2.0, h=2**-4)
    comp = localized_compare(F, Window(1.0), 2, [0])
    assert comp.energy_local == 0.0
    assert comp.sup_local == 0.0


def test_localized_empty_region_rejected():
    F = _field(R=2.0, h=2**-4)
    with pytest.raises(BuildError):
        localized_compare(F, Window(0.001, (100.0, 100.0)), 2, [0])


def test_pencil_constant_zero():
    F = _field(FunctionFamily.constant(3.0), R=2.0, h=2**-4)
    prof = pencil_profile(F, 2, [0, -1])
    assert all(v == 0.0 for v in prof.norms2)


def test_pencil_coordinate_y_closed_form():
    # the coupling sum is 4 R^2 at every level, the line terms vanish
    F = _field(FunctionFamily.coordinate_y(), R=2.0, h=2**-4)
    prof = pencil_profile(F, 2, [0, -1, -2])
    assert np.allclose(prof.norms2, 4 * 2.0**2, rtol=1e-10)


def test_pencil_gaussian_bounded():
    F = _field()
    prof = pencil_profile(F, 2, [0, -1, -2])
    assert all(np.isfinite(v) and v > 0 for v in prof.norms2)
    assert max(prof.norms2) / min(prof.norms2) < 10
