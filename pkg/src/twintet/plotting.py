"""Matplotlib figures for connectivity reports and smoothing runs."""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def score_histogram(scores: dict, path, bins: int = 50, title: str = "connectivity score"):
    """Overlaid histograms of finite scores, one series per label.

    ``scores`` maps a label to a 1D score array.  The median of each series
    is drawn as a vertical line.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    finite = {k: np.asarray(v, float)[np.isfinite(v)] for k, v in scores.items()}
    top = max([float(v.max()) for v in finite.values() if len(v)] + [1e-12])
    edges = np.linspace(0.0, top, bins + 1)
    for label, v in finite.items():
        if len(v) == 0:
            continue
        line = ax.hist(v, bins=edges, alpha=0.5, label=label)[2][0]
        med = np.sort(v)[(len(v) - 1) // 2]
        ax.axvline(med, color=line.get_facecolor(), ls="--", lw=1)
    ax.set_xlabel("C")
    ax.set_ylabel("vertices")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)


def score_scatter(positions: np.ndarray, scores: np.ndarray, path, scale: float | None = None,
                  title: str = "connectivity score"):
    """Vertices in three axis-aligned projections, coloured green to red by score."""
    plt = _pyplot()
    from matplotlib.colors import LinearSegmentedColormap

    pos = np.asarray(positions, float)
    s = np.asarray(scores, float)
    finite = s[np.isfinite(s)]
    if scale is None:
        scale = float(finite.max()) if len(finite) and finite.max() > 0 else 1.0
    cmap = LinearSegmentedColormap.from_list("gr", [(0, 1, 0), (1, 0, 0)])
    shown = np.clip(np.nan_to_num(s, nan=scale, posinf=scale), 0.0, scale)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4.2))
    for ax, (i, j, name) in zip(axes, ((0, 1, "xy"), (0, 2, "xz"), (1, 2, "yz"))):
        order = np.argsort(shown)
        sc = ax.scatter(pos[order, i], pos[order, j], c=shown[order], s=3, cmap=cmap,
                        vmin=0.0, vmax=scale)
        ax.set_aspect("equal")
        ax.set_title(name)
    fig.colorbar(sc, ax=axes, shrink=0.8, label="C")
    fig.suptitle(title)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)


def distance_curve(series: dict, path, ylabel: str = "min crest distance"):
    """Line plot of ``{label: (iterations, values)}``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (it, val) in series.items():
        ax.plot(it, val, marker=".", label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.info("wrote %s", path)
