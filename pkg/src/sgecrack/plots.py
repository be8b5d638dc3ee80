"""Self-contained SVG plots of profiles and sweep tables.

Plotting is presentation only; nothing in the solver depends on it.  SVG
output is made reproducible by fixing the element-id salt and dropping the
date stamp.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "sgecrack"
matplotlib.rcParams["svg.fonttype"] = "none"


def _save(fig, path) -> Path:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    fig.savefig(tmp, format="svg", metadata={"Date": None})
    plt.close(fig)
    tmp.replace(path)
    return path


def line_plot(path, series, xlabel: str, ylabel: str, title: str = "", logx: bool = False,
              logy: bool = False) -> Path:
    """Plot ``series``, a list of ``(label, xs, ys)`` triples, into an SVG file."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    markers = "osd^v<>"
    for i, (label, xs, ys) in enumerate(series):
        ax.plot(xs, ys, marker=markers[i % len(markers)], markersize=3, linewidth=1.2, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, linewidth=0.3)
    if any(label for label, _, _ in series):
        ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
