"""Confusion matrices, per-category and macro precision/recall/F1, and
probability-band selection for test-set construction.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classify import Prediction
from .errors import DataError
from .reports import LiradsCategory

_CATEGORY_NAMES = ("LR1", "LR2", "LR3")


@dataclass
class ConfusionMatrix:
    m: np.ndarray  # (3, 3) ints; rows = true category, columns = predicted

    def total(self) -> int:
        return int(self.m.sum())


def confusion(
    y_true: Sequence[LiradsCategory | int], y_pred: Sequence[LiradsCategory | int]
) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise DataError("label lists must have equal length")
    if not y_true:
        raise DataError("cannot build a confusion matrix from no labels")
    m = np.zeros((3, 3), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        m[int(t) - 1, int(p) - 1] += 1
    return ConfusionMatrix(m=m)


@dataclass
class MetricsReport:
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    # Categories whose precision/recall hit 0/0 and were reported as 0.
    undefined: dict[str, list[str]] = field(default_factory=dict)

    def to_json(self, cm: ConfusionMatrix) -> dict:
        return {
            "confusion": cm.m.tolist(),
            "per_category": {
                name: {
                    "precision": self.precision[name],
                    "recall": self.recall[name],
                    "f1": self.f1[name],
                    "undefined": self.undefined.get(name, []),
                }
                for name in _CATEGORY_NAMES
            },
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
        }

    def to_text(self) -> str:
        lines = [f"{'':14s}" + "".join(f"{n:>10s}" for n in _CATEGORY_NAMES) + f"{'macro':>10s}"]
        rows = (
            ("precision", self.precision, self.macro_precision),
            ("recall", self.recall, self.macro_recall),
            ("f1 score", self.f1, self.macro_f1),
        )
        for label, per_cat, macro in rows:
            cells = "".join(f"{per_cat[n]:10.3f}" for n in _CATEGORY_NAMES)
            lines.append(f"{label:14s}{cells}{macro:10.3f}")
        flagged = sorted(n for n, kinds in self.undefined.items() if kinds)
        if flagged:
            lines.append("0/0 reported as 0 for: " + ", ".join(flagged))
        return "\n".join(lines)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Per-category precision/recall/F1 plus unweighted macro averages.

    0/0 ratios are reported as 0 and flagged, so macro averages always run
    over all three categories.
    """
    if cm.total() == 0:
        raise DataError("empty confusion matrix")
    precision: dict[str, float] = {}
    recall: dict[str, float] = {}
    f1: dict[str, float] = {}
    undefined: dict[str, list[str]] = {name: [] for name in _CATEGORY_NAMES}
    for c, name in enumerate(_CATEGORY_NAMES):
        tp = int(cm.m[c, c])
        col = int(cm.m[:, c].sum())
        row = int(cm.m[c, :].sum())
        if col == 0:
            precision[name] = 0.0
            undefined[name].append("precision")
        else:
            precision[name] = tp / col
        if row == 0:
            recall[name] = 0.0
            undefined[name].append("recall")
        else:
            recall[name] = tp / row
        denom = precision[name] + recall[name]
        if denom == 0.0:
            f1[name] = 0.0
            if not undefined[name]:
                undefined[name].append("f1")
        else:
            f1[name] = 2 * precision[name] * recall[name] / denom
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=float(np.mean([precision[n] for n in _CATEGORY_NAMES])),
        macro_recall=float(np.mean([recall[n] for n in _CATEGORY_NAMES])),
        macro_f1=float(np.mean([f1[n] for n in _CATEGORY_NAMES])),
        undefined=undefined,
    )


def select_probability_bands(
    preds: Sequence[Prediction], low: float = 0.5, high: float = 0.9
) -> tuple[list[int], list[int]]:
    """Indices whose top probability is strictly < low, and strictly > high.

    The middle band is excluded; indices keep input order.
    """
    if not 0.0 <= low <= high <= 1.0:
        raise DataError("band thresholds must satisfy 0 <= low <= high <= 1")
    low_idx: list[int] = []
    high_idx: list[int] = []
    for i, pred in enumerate(preds):
        top = float(np.max(pred.probs))
        if top < low:
            low_idx.append(i)
        elif top > high:
            high_idx.append(i)
    return low_idx, high_idx
