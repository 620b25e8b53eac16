"""Sweep reporting: delimited output plus rendered figures.

The CSV is long-format, one row per (n, algorithm, metric) with mean and
std columns, values written with 17 significant digits so they equal the
in-memory aggregates exactly.  Figures are SVG (self-contained, fonts as
paths) rendered through the Agg-free vector backend with a pinned hash
salt and no timestamp, so identical data yields identical bytes.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("svg")

import matplotlib.pyplot as plt

from .experiments import SweepResult, fit_sqrt_law

__all__ = [
    "CSV_SCHEMA_LINE",
    "render_deviation_figure",
    "render_gap_figure",
    "sweep_csv_text",
    "write_bundle",
    "write_sweep_csv",
]

CSV_SCHEMA_LINE = "# ccalloc-sweep-csv v1"
_CSV_COLUMNS = "experiment,n,algorithm,metric,mean,std"

_SVG_RC = {
    "svg.hashsalt": "ccalloc",
    "svg.fonttype": "path",
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.4,
    "legend.fontsize": 9,
}

_MARKERS = ("o", "s", "^", "d", "v", "x")


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def sweep_csv_text(result: SweepResult) -> str:
    lines = [CSV_SCHEMA_LINE, _CSV_COLUMNS]
    for n in result.spec.n_grid:
        for name in result.algorithms:
            entry = result.summaries.get((n, name))
            if entry is None:
                continue
            # wall clock stays out of the CSV: identical seeds must give
            # identical bytes, and timings never replay
            for metric in result.metric_names(include_timing=False):
                s = entry[metric]
                lines.append(f"{result.spec.name},{n},{name},{metric},"
                             f"{_g17(s.mean)},{_g17(s.std)}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(sweep_csv_text(result))


def _save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_gap_figure(result: SweepResult, path) -> None:
    """Mean optimality gap against horizon length, log-log."""
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        for i, name in enumerate(result.algorithms):
            series = result.mean_series(name, "optimality_gap")
            ns = [n for n, _ in series]
            gaps = [g for _, g in series]
            ax.loglog(ns, gaps, marker=_MARKERS[i % len(_MARKERS)], label=name)
        ax.set_xlabel("number of requests n")
        ax.set_ylabel("mean optimality gap")
        ax.set_title(f"Experiment {result.spec.name}: gap vs n")
        ax.legend()
        fig.tight_layout()
        _save_svg(fig, path)


def render_deviation_figure(result: SweepResult, path) -> None:
    """Mean probability deviation against horizon length, log x-axis."""
    with plt.rc_context(_SVG_RC):
        fig, ax = plt.subplots()
        for i, name in enumerate(result.algorithms):
            series = result.mean_series(name, "prob_deviation_mean")
            ns = [n for n, _ in series]
            devs = [d for _, d in series]
            ax.semilogx(ns, devs, marker=_MARKERS[i % len(_MARKERS)], label=name)
        ax.set_xlabel("number of requests n")
        ax.set_ylabel("mean probability deviation")
        ax.set_title(f"Experiment {result.spec.name}: deviation vs n")
        ax.legend()
        fig.tight_layout()
        _save_svg(fig, path)


def write_bundle(result: SweepResult, out_dir) -> dict:
    """Write CSV + both figures into out_dir; returns slopes per algorithm.

    Slopes come from the log-log fit of mean gap against n; an algorithm
    whose gaps are nonpositive at 3+ horizons reports None.
    """
    os.makedirs(out_dir, exist_ok=True)
    write_sweep_csv(result, os.path.join(out_dir, "sweep.csv"))
    render_gap_figure(result, os.path.join(out_dir, "gap_vs_n.svg"))
    render_deviation_figure(result, os.path.join(out_dir, "deviation_vs_n.svg"))
    slopes = {}
    for name in result.algorithms:
        try:
            slope, _ = fit_sqrt_law(result.mean_series(name, "optimality_gap"))
        except ValueError:
            slope = None
        slopes[name] = slope
    return slopes
