"""Figures for CLI reports. Uses the non-interactive Agg backend."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def frontier_figure(assets: Sequence[str], rows, path) -> Path:
    """Robust objective and allocation weights against the tail probability."""
    eps = np.array([r[0] for r in rows])
    obj = np.array([r[2] for r in rows])
    X = np.array([r[1] for r in rows])
    order = np.argsort(eps)
    eps, obj, X = eps[order], obj[order], X[order]

    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.0, 5.2), sharex=True)
        ax1.plot(eps, obj, marker="o", ms=3, lw=1.2, color="k")
        ax1.set_ylabel("worst-case risk")
        for j, name in enumerate(assets):
            ax2.plot(eps, X[:, j], marker=".", lw=1.0, label=name)
        ax2.set_ylabel("weight")
        ax2.set_xlabel(r"tail probability $\epsilon$")
        if eps.min() > 0 and eps.max() / eps.min() > 20:
            ax2.set_xscale("log")
        ax2.legend(frameon=False, ncol=min(len(assets), 4))
        fig.tight_layout()
        path = Path(path)
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
