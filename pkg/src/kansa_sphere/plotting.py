"""Log-log error plots for convergence ladders."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SERIES = [("err_interp", "interpolation", "o"), ("err_ls", "least squares", "s"),
          ("err_thin", "thinned", "^")]


def plot_ladder(result, path) -> Path:
    """Errors against q_X with the fitted power laws as dashed lines."""
    path = Path(path)
    rows = [r for r in result.rows if r.status == "ok"]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for col, label, marker in SERIES:
        q = np.array([r.q_X for r in rows])
        e = np.array([getattr(r, col) for r in rows])
        if not len(rows):
            continue
        order, _ = result.fits.get(f"{col}_vs_q_X", (math.nan, math.nan))
        line, = ax.loglog(q, e, marker=marker, linestyle="none",
                          label=f"{label} (order {order:.2f})" if math.isfinite(order) else label)
        if math.isfinite(order):
            # fitted line through the geometric mean of the data
            c = np.mean(np.log(e) - order * np.log(q))
            qq = np.geomspace(q.min(), q.max(), 20)
            ax.loglog(qq, np.exp(c) * qq ** order, linestyle="--", color=line.get_color())
    ax.set_xlabel("separation radius q_X")
    ax.set_ylabel("L2 error")
    ax.grid(True, which="both", alpha=0.3)
    if rows:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
