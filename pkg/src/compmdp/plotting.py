"""Figures for solve reports: the Pareto front at one entrance/exit pair."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .semantics import SemanticArrow, extract_optimal  # noqa: E402


def plot_front(front: SemanticArrow, i: int, j: int, path: str | Path,
               front_sizes: dict | None = None) -> Path:
    """Scatter of (p, r) at ``(i, j)`` for every kept behaviour, optimum highlighted.

    With ``front_sizes`` a second panel shows how many behaviours each
    evaluated node kept.
    """
    path = Path(path)
    p = front.P[:, i - 1, j - 1]
    r = front.R[:, i - 1, j - 1]
    best_p, best_r, _ = extract_optimal(front, i, j)
    panels = 2 if front_sizes else 1
    fig, axes = plt.subplots(1, panels, figsize=(5.5 * panels, 4), squeeze=False)
    ax = axes[0, 0]
    ax.scatter(p, r, s=18, color="tab:blue", alpha=0.7, label="kept behaviours")
    ax.scatter([best_p], [best_r], s=80, marker="*", color="tab:red", label="optimum")
    ax.set_xlabel(f"reach probability p[{i},{j}]")
    ax.set_ylabel(f"expected reward r[{i},{j}]")
    ax.set_title(f"{len(front)} behaviour(s) at entrance {i}, exit {j}")
    ax.legend(loc="best", fontsize=8)
    if front_sizes:
        ax2 = axes[0, 1]
        names = list(front_sizes)
        sizes = np.array([front_sizes[k] for k in names])
        order = np.argsort(-sizes, kind="stable")[:20]
        ax2.barh([names[k] for k in order][::-1], sizes[order][::-1], color="tab:gray")
        ax2.set_xlabel("front size")
        ax2.set_title("largest fronts")
        ax2.tick_params(axis="y", labelsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
