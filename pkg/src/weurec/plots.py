"""Figure rendering for the report CSVs.

Every function reads one of the delimited outputs (skipping `#` header
comments) and writes a PNG next to it.  The math modules never import
this; figures are a presentation layer over the CSVs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless backend; must be selected before pyplot
import matplotlib.pyplot as plt

FIGSIZE = (7.0, 4.5)
DPI = 120


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(line for line in handle if not line.startswith("#"))]
    return rows[0], rows[1:]


def _save(fig, out_path) -> Path:
    out = Path(out_path)
    fig.tight_layout()
    fig.savefig(out, dpi=DPI)
    plt.close(fig)
    return out


def render_metrics(metrics_csv, out_path) -> Path:
    """Grouped bars: one cluster per cutoff, one bar per metric."""
    header, rows = _read_csv(metrics_csv)
    ks = [int(r[1]) for r in rows]
    metric_names = header[2:]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    width = 0.8 / len(metric_names)
    for i, name in enumerate(metric_names):
        values = [float(r[2 + i]) for r in rows]
        positions = [j + i * width for j in range(len(ks))]
        ax.bar(positions, values, width=width, label=name)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(ks))])
    ax.set_xticklabels([f"K={k}" for k in ks])
    ax.set_ylabel("metric value")
    ax.set_title(f"Ranking metrics ({rows[0][0]})")
    ax.legend()
    return _save(fig, out_path)


def render_training_log(log_csv, out_path) -> Path:
    """Objective and validation metric curves on twin axes."""
    header, rows = _read_csv(log_csv)
    epochs = [int(r[0]) for r in rows]
    objective = [float(r[1]) for r in rows]
    val = [float(r[2]) for r in rows]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(epochs, objective, marker="o", color="tab:blue", label=header[1])
    ax.set_xlabel("epoch")
    ax.set_ylabel(header[1], color="tab:blue")
    twin = ax.twinx()
    twin.plot(epochs, val, marker="s", color="tab:orange", label=header[2])
    twin.set_ylabel(header[2], color="tab:orange")
    ax.set_title("Training trace")
    return _save(fig, out_path)


def render_pwf_curve(curve_csv, out_path) -> Path:
    """Learned weighting curve against the identity diagonal."""
    _, rows = _read_csv(curve_csv)
    p = [float(r[0]) for r in rows]
    w = [float(r[1]) for r in rows]
    ident = [float(r[2]) for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(p, w, color="tab:blue", label="learned weighting")
    ax.plot(p, ident, color="gray", linestyle="--", label="identity")
    ax.set_xlabel("probability p")
    ax.set_ylabel("weight w(p)")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title("Probability weighting")
    ax.legend()
    return _save(fig, out_path)


def render_scale_histograms(histogram_csv, out_path) -> Path:
    """Three panels: per-user mean alpha, mean beta, and their difference."""
    _, rows = _read_csv(histogram_csv)
    lo = [float(r[0]) for r in rows]
    hi = [float(r[1]) for r in rows]
    widths = [h - l for l, h in zip(lo, hi)]
    counts = {
        "mean alpha": [int(r[2]) for r in rows],
        "mean beta": [int(r[3]) for r in rows],
        "alpha - beta": [int(r[4]) for r in rows],
    }
    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.8))
    for ax, (name, series) in zip(axes, counts.items()):
        ax.bar(lo, series, width=widths, align="edge")
        ax.set_title(name)
        ax.set_xlabel("value")
    axes[0].set_ylabel("users")
    return _save(fig, out_path)
