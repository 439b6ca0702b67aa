"""Binary-classification evaluation: confusion counts, the four headline
metrics, and ROC/AUC. The positive class is 1 (attack) throughout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class MetricsReport:
    """Raw metric values plus flags for the degenerate cases.

    An undefined metric (precision with no positive predictions, recall with
    no positive truths) is reported as 0.0 with its `*_defined` flag cleared,
    so degenerate folds keep pipelines running instead of raising.
    """

    precision: float
    recall: float
    f1: float
    accuracy: float
    precision_defined: bool = True
    recall_defined: bool = True
    f1_defined: bool = True

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "flags": {
                "precision_defined": self.precision_defined,
                "recall_defined": self.recall_defined,
                "f1_defined": self.f1_defined,
            },
        }


@dataclass(frozen=True)
class RocCurve:
    """Threshold-sweep curve: (false positive rate, true positive rate) points
    from (0, 0) to (1, 1), plus the trapezoidal area under it."""

    points: tuple[tuple[float, float], ...]
    auc: float


def _binary_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} contains values outside {{0, 1}}")
    return arr.astype(np.int64)


def confusion(labels, predictions) -> ConfusionMatrix:
    """Tally TP/FP/TN/FN for 0/1 truth and prediction vectors."""
    truth = _binary_vector(labels, "labels")
    pred = _binary_vector(predictions, "predictions")
    if truth.shape != pred.shape:
        raise ValueError(f"length mismatch: {truth.size} labels vs {pred.size} predictions")
    tp = int(np.count_nonzero((truth == 1) & (pred == 1)))
    fp = int(np.count_nonzero((truth == 0) & (pred == 1)))
    tn = int(np.count_nonzero((truth == 0) & (pred == 0)))
    fn = int(np.count_nonzero((truth == 1) & (pred == 0)))
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Precision TP/(TP+FP), recall TP/(TP+FN), their harmonic mean F1, and
    accuracy (TP+TN)/total, from raw counts."""
    if cm.total == 0:
        raise ValueError("metrics of an empty confusion matrix")
    precision_defined = (cm.tp + cm.fp) > 0
    recall_defined = (cm.tp + cm.fn) > 0
    precision = cm.tp / (cm.tp + cm.fp) if precision_defined else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if recall_defined else 0.0
    f1_defined = precision_defined and recall_defined
    if f1_defined and (precision + recall) > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    accuracy = (cm.tp + cm.tn) / cm.total
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
        f1_defined=f1_defined,
    )


def roc_curve(labels, scores) -> RocCurve:
    """Sweep thresholds over the distinct scores, descending; a sample is
    predicted positive when its score >= threshold. Tied scores collapse to a
    single point, so ranking ties show up as diagonal segments."""
    truth = _binary_vector(labels, "labels")
    score = np.asarray(scores, dtype=np.float64)
    if truth.shape != score.shape:
        raise ValueError(f"length mismatch: {truth.size} labels vs {score.size} scores")
    n_pos = int(np.count_nonzero(truth))
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present in the truth vector")

    order = np.argsort(-score, kind="stable")
    sorted_truth = truth[order]
    sorted_score = score[order]
    tp_cum = np.cumsum(sorted_truth)
    fp_cum = np.cumsum(1 - sorted_truth)
    # last index of each tied-score group = the point that group contributes
    group_end = np.flatnonzero(np.append(sorted_score[1:] != sorted_score[:-1], True))
    tpr = tp_cum[group_end] / n_pos
    fpr = fp_cum[group_end] / n_neg
    points = [(0.0, 0.0)] + list(zip(fpr.tolist(), tpr.tolist()))
    auc = float(np.trapezoid([p[1] for p in points], [p[0] for p in points]))
    return RocCurve(points=tuple(points), auc=auc)
