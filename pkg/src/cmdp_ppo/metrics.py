"""Confusion matrix and weighted-average classification metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def confusion(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """counts[i, j] = number of samples with true class i predicted as j."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("label arrays must be 1-D and equal length")
    if t.size and (t.min() < 0 or t.max() >= n_classes
                   or p.min() < 0 or p.max() >= n_classes):
        raise ValueError("label out of range")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return counts


@dataclass
class MetricsReport:
    accuracy: float
    precision: list[float]           # per class
    recall: list[float]
    f1: list[float]
    support: list[int]
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    precision_macro: float
    recall_macro: float
    f1_macro: float

    def to_json(self) -> str:
        per_class = [
            {"precision": self.precision[c], "recall": self.recall[c],
             "f1": self.f1[c], "support": self.support[c]}
            for c in range(len(self.support))
        ]
        doc = {
            "accuracy": self.accuracy,
            "precision_weighted": self.precision_weighted,
            "recall_weighted": self.recall_weighted,
            "f1_weighted": self.f1_weighted,
            "precision_macro": self.precision_macro,
            "recall_macro": self.recall_macro,
            "f1_macro": self.f1_macro,
            "per_class": per_class,
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def report(matrix: np.ndarray) -> MetricsReport:
    """Per-class and support-weighted precision/recall/F1 from a confusion matrix.

    A never-predicted class gets precision 0 (not NaN) so weighted aggregates
    stay finite for degenerate policies; F1 is 0 whenever both parts are 0.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("confusion matrix must be square")
    total = m.sum()
    if total <= 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(m)
    row = m.sum(axis=1)   # support per true class
    col = m.sum(axis=0)   # predictions per class
    precision = np.divide(tp, col, out=np.zeros_like(tp), where=col > 0)
    recall = np.divide(tp, row, out=np.zeros_like(tp), where=row > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom,
                   out=np.zeros_like(tp), where=denom > 0)
    w = row / total
    return MetricsReport(
        accuracy=float(tp.sum() / total),
        precision=[float(x) for x in precision],
        recall=[float(x) for x in recall],
        f1=[float(x) for x in f1],
        support=[int(x) for x in row],
        precision_weighted=float(w @ precision),
        recall_weighted=float(w @ recall),
        f1_weighted=float(w @ f1),
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        f1_macro=float(f1.mean()),
    )
