"""Report files for the CLI: delimited tables, JSON summaries, and figures.

CSV cells are written with repr so reruns of the same configuration are
byte-identical; no timestamps enter any report. Figures are rendered
headlessly next to the tables they plot.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

SCHEMA_VERSION = 1


def resolve_out_dir(out: str | None) -> Path:
    path = Path(out or os.environ.get("TRACELAB_OUT", "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row.get(k, "")) for k in header])


def _strictify(obj):
    """Non-finite floats become strings so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if obj == obj and abs(obj) != float("inf") else repr(obj)
    if isinstance(obj, dict):
        return {k: _strictify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strictify(v) for v in obj]
    return obj


def write_json(path: Path, command: str, config: dict, results: dict) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": _strictify(config),
        "results": _strictify(results),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    try:
        import numpy as np

        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
    except ImportError:
        pass
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def line_figure(path: Path, rows: list[dict], x: str, ys: list[str], title: str,
                logx: bool = False, logy: bool = False) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [row[x] for row in rows]
    for key in ys:
        ax.plot(xs, [row[key] for row in rows], marker="o", label=key)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.legend()
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def bar_figure(path: Path, items: dict[str, float], title: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = list(items)
    ax.bar(range(len(keys)), [items[k] for k in keys])
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=20, ha="right")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def field_figure(path: Path, field, title: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 5))
    x0, x1, y0, y1 = field.bounds()
    im = ax.imshow(
        field.values.T,
        origin="lower",
        extent=(x0, x1, y0, y1),
        cmap="viridis",
        aspect="equal",
    )
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def spectrum_figure(path: Path, spectrum, title: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(spectrum.xi, spectrum.power() + 1e-300, lw=0.8)
    ax.set_xlabel("xi")
    ax.set_ylabel("|amplitude|^2")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
