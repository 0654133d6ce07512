"""Command-line surface: `tracelab <command> [--flag value]...`.

Every command writes a JSON summary (with the resolved configuration echoed
for provenance) plus CSV tables and figures for the tabular outputs. Flags
override an optional JSON config file. The --threads flag is recorded but
results never depend on it: all numerics run on deterministic single-threaded
reductions. Exit codes: 0 success, 1 numerical rejection (machine-readable
error JSON on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import report
from .conformal_lab import StripTrace, counterexample_growth, growth_slope, quadrant_trace_norm, sinh_kernel_norm, strip_trace_norm
from .errors import BuildError, TraceLabError
from .extension import plane_energy, poisson_extend
from .fractal_lab import (
    VertexFunction,
    build_fractal,
    h_beta_trace_profile,
    sc_renorm_estimate,
    sg_harmonic_extend,
    sg_renormalized_profile,
)
from .functions import FunctionFamily, family_from_name, sample_on_graph, sample_plane, trace_plane_to_graph
from .gp_lab import localized_compare, pencil_profile, reconstruct_from_traces, trace_profile
from .graphs import GraphFamily, Window, build_graph
from .seminorms import NormKind, seminorm
from .spectral import kernel_constant, line_spectrum, spectral_half_norm, spectral_tilde_norm


def _parse_levels(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        a, b = text.split("..")
        a, b = int(a), int(b)
        step = 1 if b >= a else -1
        return list(range(a, b + step, step))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _family(cfg) -> FunctionFamily:
    return family_from_name(cfg["family"], cfg.get("alpha"))


def _sample_field(cfg):
    window = Window(cfg["R"])
    return sample_plane(_family(cfg), window, cfg["spacing"])


def _line_function(cfg, center=(0.0, 0.0)):
    g = build_graph(GraphFamily.interval_line(), Window(cfg["R"], center))
    n = int(round(2 * cfg["R"] * cfg["n_per_unit"]))
    return sample_on_graph(_family(cfg), g, n)


_KIND_BUILDERS = {
    "half-line": lambda cfg: (GraphFamily.interval_line(), NormKind.half_line(tail=not cfg["no_tail"])),
    "tilde-half-line": lambda cfg: (GraphFamily.interval_line(), NormKind.tilde_half_line()),
    "half-graph": lambda cfg: (GraphFamily.half_line_pair(), NormKind.half_graph(tail=not cfg["no_tail"])),
    "integer-graph": lambda cfg: (GraphFamily.integer_graph(), NormKind.integer_graph()),
    "square": lambda cfg: (GraphFamily.square(cfg["delta"]), NormKind.square()),
    "graph-paper": lambda cfg: (
        GraphFamily.graph_paper(cfg["delta"]),
        NormKind.graph_paper(include_straight=not cfg["no_straight"]),
    ),
    "circle": lambda cfg: (GraphFamily.circle(cfg["radius"]), NormKind.circle()),
    "pencil-tilde": lambda cfg: (GraphFamily.pencil(cfg["delta"]), NormKind.pencil_tilde(cfg["delta"])),
    "h-beta": lambda cfg: (GraphFamily.interval_line(), NormKind.h_beta(cfg["beta"])),
}


def _cmd_norm(cfg, out, figures):
    if cfg["kind"] not in _KIND_BUILDERS:
        raise BuildError(f"unknown norm kind {cfg['kind']!r}")
    family, kind = _KIND_BUILDERS[cfg["kind"]](cfg)
    g = build_graph(family, Window(cfg["R"]))
    n = max(2, int(round(cfg["n_per_unit"] * max(e.length for e in g.edges))))
    f = sample_on_graph(_family(cfg), g, n)
    rep = seminorm(f, kind, refine_estimate=cfg["refine"])
    if cfg.get("dump_graph"):
        with open(out / cfg["dump_graph"], "w") as fh:
            json.dump(g.to_json_dict(), fh)
    results = {"norm": rep.to_json_dict()}
    if figures and all(math.isfinite(v) for v in rep.breakdown.values()):
        report.bar_figure(out / "norm_breakdown.png", rep.breakdown, f"{rep.kind} breakdown")
    return results, []


def _cmd_spectrum(cfg, out, figures):
    f = _line_function(cfg)
    s = line_spectrum(f, pad=cfg["pad"])
    s.to_csv(out / "spectrum.csv")
    if figures:
        report.spectrum_figure(out / "spectrum.png", s, f"spectrum of {cfg['family']}")
    return {
        "half_norm": spectral_half_norm(s),
        "tilde_norm": spectral_tilde_norm(s),
        "window": s.window,
        "spacing": s.spacing,
    }, []


def _cmd_extend(cfg, out, figures):
    f = _line_function(cfg)
    F = poisson_extend(f, spacing=cfg["spacing"])
    rep = plane_energy(F)
    if cfg["field_csv"]:
        F.to_csv(out / cfg["field_csv"])
    if figures:
        report.field_figure(out / "extend_field.png", F, f"Poisson extension of {cfg['family']}")
    tr = trace_plane_to_graph(F, f.graph)
    trace_err = float(np.max(np.abs(tr.samples[0] - f.samples[0])))
    return {"energy": rep.to_json_dict(), "trace_identity_max_err": trace_err,
            "warnings": F.meta.get("warnings", [])}, []


def _profile_outputs(profile, out, figures, stem):
    rows = profile.rows()
    header = ["n", "delta", "norm2", "energy", "ratio", "resolution", "window"]
    report.write_csv(out / f"{stem}.csv", header, rows)
    if figures:
        report.line_figure(out / f"{stem}.png", rows, "n", ["norm2"], stem)
    results = {
        "levels": profile.levels,
        "norms2": profile.norms2,
        "energy": profile.energy,
        "sup": profile.sup(),
        "sup_over_energy": profile.sup() / profile.energy if profile.energy else None,
    }
    return results, rows


def _cmd_gp_profile(cfg, out, figures):
    F = _sample_field(cfg)
    profile = trace_profile(F, cfg["m"], _parse_levels(cfg["levels"]))
    results, _ = _profile_outputs(profile, out, figures, "gp_profile")
    return results, []


def _cmd_pencil(cfg, out, figures):
    F = _sample_field(cfg)
    profile = pencil_profile(F, cfg["m"], _parse_levels(cfg["levels"]))
    results, _ = _profile_outputs(profile, out, figures, "pencil_profile")
    return results, []


def _cmd_gp_reconstruct(cfg, out, figures):
    F = _sample_field(cfg)
    window = Window(cfg["R"])
    levels = _parse_levels(cfg["levels"])
    traces = []
    for n in sorted(set(levels), reverse=True):
        g = build_graph(GraphFamily.graph_paper(float(cfg["m"]) ** n), window)
        traces.append(trace_plane_to_graph(F, g))
    field, energy_rep, info = reconstruct_from_traces(traces)
    original = plane_energy(F).value
    if figures:
        report.field_figure(out / "gp_reconstruct.png", field, "harmonic reconstruction")
    rows = [
        {
            "n": n,
            "norm2": v,
            "window": cfg["R"],
            "resolution": max(2, int(round(float(cfg["m"]) ** n / cfg["spacing"]))),
        }
        for n, v in zip(sorted(set(levels), reverse=True), info["level_norms2"])
    ]
    report.write_csv(out / "gp_reconstruct.csv", ["n", "norm2", "resolution", "window"], rows)
    return {
        "reconstruction_energy": info["energy"],
        "original_energy": original,
        "energy_ratio": info["energy"] / original if original else None,
        "sup": info["sup"],
        "energy_over_sup": info["energy_over_sup"],
    }, []


def _cmd_gp_local(cfg, out, figures):
    F = _sample_field(cfg)
    region = Window(cfg["region_R"], (cfg["region_x"], cfg["region_y"]))
    comp = localized_compare(F, region, cfg["m"], _parse_levels(cfg["levels"]))
    rows = [
        {
            "n": n,
            "norm2": v,
            "window": cfg["region_R"],
            "resolution": max(2, int(round(float(cfg["m"]) ** n / cfg["spacing"]))),
        }
        for n, v in zip(comp.levels, comp.norms2)
    ]
    report.write_csv(out / "gp_local.csv", ["n", "norm2", "resolution", "window"], rows)
    if figures:
        report.line_figure(out / "gp_local.png", rows, "n", ["norm2"], "localized profile")
    return {
        "energy_local": comp.energy_local,
        "sup_local": comp.sup_local,
        "ratio": comp.ratio,
    }, []


def _parse_boundary(cfg) -> tuple[float, float, float]:
    vals = [float(t) for t in str(cfg["boundary"]).split(",")]
    if len(vals) != 3:
        raise BuildError("boundary needs three comma-separated corner values")
    return tuple(vals)


def _sg_data(cfg, level):
    """Harmonic extension of corner data, unless a family is requested."""
    if cfg.get("family"):
        return VertexFunction.from_family(build_fractal("sg", level), _family(cfg))
    f0 = VertexFunction.from_boundary(build_fractal("sg", 0), *_parse_boundary(cfg))
    return sg_harmonic_extend(f0, level)


def _cmd_sg_energy(cfg, out, figures):
    level = cfg["level"]
    f = _sg_data(cfg, level)
    rows = sg_renormalized_profile(f)
    for row in rows:
        row["window"] = 1.0
        row["resolution"] = level
    report.write_csv(out / "sg_energy.csv", ["m", "raw", "renormalized", "resolution", "window"], rows)
    if figures:
        report.line_figure(out / "sg_energy.png", rows, "m", ["renormalized"], "renormalized gasket energy")
    return {"profile": rows, "final": rows[-1]["renormalized"]}, []


def _cmd_sg_trace(cfg, out, figures):
    level = cfg["level"]
    f = _sg_data(cfg, level)
    rows = h_beta_trace_profile(f, cfg["depth"], cfg.get("beta"))
    for row in rows:
        row["window"] = 1.0
    report.write_csv(
        out / "sg_trace.csv", ["m", "norm2", "renormalized_energy", "resolution", "window"], rows
    )
    if figures:
        report.line_figure(out / "sg_trace.png", rows, "m", ["norm2"], "H^beta trace profile")
    vals = [r["norm2"] for r in rows]
    return {"profile": rows, "max_over_min": max(vals) / min(vals) if min(vals) else None}, []


def _cmd_sc_resistance(cfg, out, figures):
    rows = sc_renorm_estimate(cfg["max_level"])
    for row in rows:
        row["window"] = 1.0
        row["resolution"] = row["m"]
    report.write_csv(
        out / "sc_resistance.csv", ["m", "resistance", "ratio", "beta", "resolution", "window"], rows
    )
    if figures:
        report.line_figure(out / "sc_resistance.png", rows, "m", ["resistance"], "carpet resistance")
    ratios = [r["ratio"] for r in rows if "ratio" in r]
    return {"rows": rows, "last_ratio": ratios[-1] if ratios else None}, []


def _cmd_strip(cfg, out, figures):
    f0 = _line_function(cfg)
    cfg_upper = dict(cfg, family=cfg.get("family_upper") or cfg["family"],
                     alpha=cfg.get("alpha_upper", cfg.get("alpha")))
    f1 = _line_function(cfg_upper, center=(0.0, math.pi))
    t = StripTrace(f0, f1)
    v0, v1, l2 = strip_trace_norm(t)
    results = {
        "tilde_lower": v0,
        "tilde_upper": v1,
        "l2_difference": l2,
        "total": v0 + v1 + l2,
        "sinh_lower": sinh_kernel_norm(f0),
        "sinh_upper": sinh_kernel_norm(f1),
    }
    if figures:
        report.bar_figure(out / "strip.png", {k: results[k] for k in ("tilde_lower", "tilde_upper", "l2_difference")}, "strip trace norm")
    return results, []


def _cmd_quadrant(cfg, out, figures):
    center = (cfg["R"] / 2.0, 0.0)
    g = build_graph(GraphFamily.interval_line(), Window(cfg["R"] / 2.0, center))
    n = int(round(cfg["R"] * cfg["n_per_unit"]))
    f0 = sample_on_graph(_family(cfg), g, n)
    fam1 = family_from_name(cfg.get("family_upper") or cfg["family"], cfg.get("alpha_upper", cfg.get("alpha")))
    f1 = sample_on_graph(fam1, g, n)
    d0, d1, j = quadrant_trace_norm(f0, f1)
    results = {"weighted_lower": d0, "weighted_upper": d1, "junction": j}
    if figures and all(math.isfinite(v) for v in results.values()):
        report.bar_figure(out / "quadrant.png", results, "quadrant trace integrals")
    return results, []


def _cmd_counterexample(cfg, out, figures):
    windows = [float(t) for t in str(cfg["windows"]).split(",")]
    rows = counterexample_growth(windows, samples_per_unit=cfg["n_per_unit"])
    report.write_csv(
        out / "counterexample.csv",
        ["window", "full_norm2", "tilde_norm2", "resolution"],
        rows,
    )
    if figures:
        report.line_figure(out / "counterexample.png", rows, "window",
                           ["full_norm2", "tilde_norm2"], "smooth step growth", logx=True)
    return {"rows": rows, "log_slope": growth_slope(rows)}, []


def _cmd_constant_c(cfg, out, figures):
    c = kernel_constant()
    target = 4.0 * math.pi**2
    return {"c": c, "target": "4*pi^2", "target_value": target, "rel_err": abs(c - target) / target}, []


_COMMANDS = {
    "norm": (_cmd_norm, {"kind": "half-line", "family": "gaussian", "alpha": None,
                         "R": 8.0, "n_per_unit": 64, "delta": 1.0, "radius": 1.0,
                         "beta": 0.75, "no_tail": False, "no_straight": False,
                         "refine": False, "dump_graph": None}),
    "spectrum": (_cmd_spectrum, {"family": "gaussian", "alpha": None, "R": 8.0,
                                 "n_per_unit": 256, "pad": 1}),
    "extend": (_cmd_extend, {"family": "gaussian", "alpha": None, "R": 8.0,
                             "n_per_unit": 64, "spacing": 2**-6, "field_csv": None}),
    "gp-profile": (_cmd_gp_profile, {"family": "gaussian", "alpha": None, "R": 8.0,
                                     "spacing": 2**-6, "m": 2, "levels": "0..-4"}),
    "gp-reconstruct": (_cmd_gp_reconstruct, {"family": "gaussian", "alpha": None, "R": 8.0,
                                             "spacing": 2**-6, "m": 2, "levels": "0..-3"}),
    "gp-local": (_cmd_gp_local, {"family": "gaussian", "alpha": None, "R": 8.0,
                                 "spacing": 2**-6, "m": 2, "levels": "0..-3",
                                 "region_R": 1.0, "region_x": 0.0, "region_y": 0.0}),
    "pencil": (_cmd_pencil, {"family": "gaussian", "alpha": None, "R": 8.0,
                             "spacing": 2**-6, "m": 2, "levels": "0..-4"}),
    "sg-energy": (_cmd_sg_energy, {"level": 5, "boundary": "0,0,1", "family": None,
                                   "alpha": None}),
    "sg-trace": (_cmd_sg_trace, {"level": 6, "depth": 4, "beta": None,
                                 "boundary": "0,0,1", "family": None, "alpha": None}),
    "sc-resistance": (_cmd_sc_resistance, {"max_level": 4}),
    "strip": (_cmd_strip, {"family": "gaussian", "alpha": None, "family_upper": None,
                           "alpha_upper": None, "R": 8.0, "n_per_unit": 32}),
    "quadrant": (_cmd_quadrant, {"family": "gaussian", "alpha": None, "family_upper": None,
                                 "alpha_upper": None, "R": 8.0, "n_per_unit": 32}),
    "counterexample": (_cmd_counterexample, {"windows": "8,16,32,64", "n_per_unit": 32}),
    "constant-c": (_cmd_constant_c, {}),
}

_FLAG_TYPES = {
    "R": float, "n_per_unit": int, "delta": float, "radius": float, "beta": float,
    "alpha": float, "alpha_upper": float, "spacing": float, "m": int, "level": int,
    "depth": int, "max_level": int, "region_R": float, "region_x": float,
    "region_y": float, "pad": int,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracelab",
        description="Half-order seminorms on metric graphs, plane traces and "
        "extensions, and fractal energies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_fn, defaults) in _COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON file with defaults")
        p.add_argument("--out", default=None, help="output directory (or TRACELAB_OUT)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker hint; recorded, never affects results")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-figures", action="store_true")
        for key, dval in defaults.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(dval, bool):
                p.add_argument(flag, action="store_true", default=None, dest=key)
            else:
                p.add_argument(flag, type=_FLAG_TYPES.get(key, str), default=None, dest=key)
    return parser


def _resolve_config(args, defaults: dict) -> dict:
    cfg = dict(defaults)
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        for k, v in file_cfg.items():
            if k in cfg:
                cfg[k] = v
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    # threads is a worker hint only; keeping it out of the echo keeps reports
    # byte-identical across thread counts
    cfg["seed"] = args.seed
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    fn, defaults = _COMMANDS[args.command]
    try:
        cfg = _resolve_config(args, defaults)
        out = report.resolve_out_dir(args.out)
        results, _extra = fn(cfg, out, figures=not args.no_figures)
        report.write_json(out / f"{args.command.replace('-', '_')}.json", args.command, cfg, results)
    except TraceLabError as exc:
        json.dump(
            {"error": {"type": type(exc).__name__, "message": str(exc)}},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
