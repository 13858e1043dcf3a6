"""Figure rendering for experiment traces.

One figure per experiment: distance to the reference point (black),
step-size (blue), and norm of the normalized state (magenta) against
function evaluations, on a log scale, all replicates overlaid.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SERIES = (
    ("x_norm", "black", "distance to reference"),
    ("sigma", "#1f4fd8", "step-size"),
    ("z_norm", "magenta", "normalized state norm"),
)


def render_trace_figure(tables, path, title=None):
    """Render trace tables (dicts of column arrays) to an image file.

    Columns with no finite positive data (e.g. x_norm in pure chain
    runs) are skipped.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.6))
    seen = set()
    for table in tables:
        evals = np.asarray(table["evals"], dtype=float)
        for column, color, label in _SERIES:
            values = np.asarray(table[column], dtype=float)
            mask = np.isfinite(values) & (values > 0)
            if not mask.any():
                continue
            ax.plot(
                evals[mask], values[mask], color=color, linewidth=0.9,
                label=None if column in seen else label,
            )
            seen.add(column)
    ax.set_yscale("log")
    ax.set_xlabel("function evaluations")
    ax.grid(True, which="major", alpha=0.3)
    if title:
        ax.set_title(title)
    if seen:
        ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    # suppress the version-bearing metadata chunk for reproducible bytes
    fig.savefig(path, dpi=130, metadata={"Software": None})
    plt.close(fig)
