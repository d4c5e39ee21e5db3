"""Matplotlib figure rendering for evaluation reports.

Figures are written straight to files (Agg backend); nothing here opens a
display. Kept separate so library users without a reporting path never touch
matplotlib state.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluate import ConfusionMatrix

_CATEGORY_NAMES = ("LR1", "LR2", "LR3")


def save_confusion_figure(cm: ConfusionMatrix, path: str, title: str = "LI-RADS confusion matrix") -> None:
    """Heatmap with per-cell counts; x axis predicted, y axis true."""
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    m = cm.m
    im = ax.imshow(m, cmap="Blues")
    ax.set_xticks(range(3), _CATEGORY_NAMES)
    ax.set_yticks(range(3), _CATEGORY_NAMES)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    ax.set_title(title)
    cutoff = m.max() / 2 if m.max() else 0.5
    for r in range(3):
        for c in range(3):
            ax.text(
                c, r, str(int(m[r, c])),
                ha="center", va="center",
                color="white" if m[r, c] > cutoff else "black",
            )
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_band_histogram(
    top_probs: np.ndarray, low: float, high: float, path: str,
    title: str = "Top predicted probability",
) -> None:
    """Histogram of max predicted probabilities with the band cutoffs marked."""
    fig, ax = plt.subplots(figsize=(4.8, 3.2))
    ax.hist(top_probs, bins=np.linspace(0.0, 1.0, 41), color="#4878a8", edgecolor="white")
    ax.axvline(low, color="#b04030", linestyle="--", label=f"low < {low:g}")
    ax.axvline(high, color="#308050", linestyle="--", label=f"high > {high:g}")
    ax.set_xlabel("max probability")
    ax.set_ylabel("reports")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
