"""Study-report output: delimited metrics plus rendered figures.

``write_report_csv`` emits one row per fitted method with the selection
metrics (TPR/FPR/PPV, percent) and the aggregate coefficient errors
(Bias/SD/RMSE).  ``render_report_figures`` draws the same numbers as
grouped bar charts next to the CSV so a run is inspectable at a glance.
Floats are written with a fixed format, so reports from identical runs
are byte-identical.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .study import StudyReport  # noqa: E402

__all__ = ["write_report_csv", "render_report_figures", "render_surface_png"]

REPORT_COLUMNS = ["method", "likelihood", "weights", "kappa",
                  "tpr", "fpr", "ppv", "bias", "sd", "rmse",
                  "n_replicates", "n_failures"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.10g" % value
    return str(value)


def write_report_csv(report: StudyReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])


def _method_labels(report: StudyReport) -> list[str]:
    return [f"{r['method']}\n{'wpl' if r['weights'] == 'wpl' else 'pl'}"
            f"\n{r['likelihood']}" for r in report.rows]


def _grouped_bars(ax, labels, series, title, ylabel):
    import numpy as np

    x = np.arange(len(labels))
    width = 0.8 / len(series)
    for k, (name, values) in enumerate(series):
        ax.bar(x + (k - (len(series) - 1) / 2) * width, values, width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)


def render_report_figures(report: StudyReport, out_dir, stem: str = "report") -> list[Path]:
    """Selection and prediction bar charts as PNG files; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = _method_labels(report)
    paths = []

    fig, ax = plt.subplots(figsize=(1.8 + 1.4 * len(labels), 4.0))
    _grouped_bars(ax, labels, [
        ("TPR", [r["tpr"] for r in report.rows]),
        ("FPR", [r["fpr"] for r in report.rows]),
        ("PPV", [r["ppv"] for r in report.rows]),
    ], f"Support recovery ({report.n_replicates} replicates)", "percent")
    fig.tight_layout()
    sel_path = out_dir / f"{stem}_selection.png"
    fig.savefig(sel_path, dpi=120)
    plt.close(fig)
    paths.append(sel_path)

    fig, ax = plt.subplots(figsize=(1.8 + 1.4 * len(labels), 4.0))
    _grouped_bars(ax, labels, [
        ("Bias", [r["bias"] for r in report.rows]),
        ("SD", [r["sd"] for r in report.rows]),
        ("RMSE", [r["rmse"] for r in report.rows]),
    ], "Coefficient error", "aggregate error")
    fig.tight_layout()
    pred_path = out_dir / f"{stem}_prediction.png"
    fig.savefig(pred_path, dpi=120)
    plt.close(fig)
    paths.append(pred_path)
    return paths


def render_surface_png(grid, path, title: str = "fitted intensity") -> Path:
    """Heat map of a raster (used for fitted-intensity surfaces)."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    win = grid.window
    im = ax.imshow(grid.values, origin="lower",
                   extent=(win.x_min, win.x_max, win.y_min, win.y_max),
                   aspect="equal", cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
