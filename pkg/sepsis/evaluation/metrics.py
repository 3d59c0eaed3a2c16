"""
Metrics Module
Confusion counts, threshold metrics for either positive class, and rank-based AUROC
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..errors import EvaluationError, InputError

CLASS_NAMES = {True: "deceased", False: "survived"}


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ClassMetrics:
    """Threshold metrics for one positive class; names in `undefined` had a zero denominator and read 0"""

    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: tuple = ()

    def to_dict(self) -> dict:
        return {
            "tp": self.counts.tp, "fp": self.counts.fp, "tn": self.counts.tn, "fn": self.counts.fn,
            "accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "undefined": list(self.undefined),
        }


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean; 0 when both are 0"""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def confusion_and_metrics(labels, predictions, positive_label: bool = True) -> ClassMetrics:
    """
    Confusion counts and accuracy / precision / recall / F1

    Args:
        labels: True outcomes (True = deceased)
        predictions: Predicted outcomes
        positive_label: Which class counts as positive
    """
    labels = np.asarray(labels, dtype=bool)
    predictions = np.asarray(predictions, dtype=bool)
    if len(labels) != len(predictions):
        raise InputError(f"{len(labels)} labels but {len(predictions)} predictions")
    if len(labels) == 0:
        raise InputError("metrics need at least one row")
    actual = labels == positive_label
    predicted = predictions == positive_label
    counts = ConfusionCounts(
        tp=int(np.sum(actual & predicted)),
        fp=int(np.sum(~actual & predicted)),
        tn=int(np.sum(~actual & ~predicted)),
        fn=int(np.sum(actual & ~predicted)),
    )
    undefined = []
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    if counts.tp + counts.fp == 0:
        undefined.append("precision")
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    if counts.tp + counts.fn == 0:
        undefined.append("recall")
    return ClassMetrics(
        counts=counts,
        accuracy=(counts.tp + counts.tn) / counts.total,
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        undefined=tuple(undefined),
    )


def both_class_metrics(labels, predictions) -> dict:
    """Metrics with each class as positive, plus their macro average"""
    per_class = {CLASS_NAMES[c]: confusion_and_metrics(labels, predictions, c) for c in (True, False)}
    out = {name: m.to_dict() for name, m in per_class.items()}
    out["macro"] = {
        name: float(np.mean([getattr(m, name) for m in per_class.values()]))
        for name in ("precision", "recall", "f1")
    }
    return out


def check_two_classes(scores, labels) -> tuple:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    if len(scores) != len(labels):
        raise InputError(f"{len(scores)} scores but {len(labels)} labels")
    if labels.all() or not labels.any():
        raise EvaluationError("AUROC needs both classes")
    return scores, labels


def auroc(scores, labels) -> float:
    """Mann-Whitney statistic from the positive rank sum; tied pairs count half"""
    scores, labels = check_two_classes(scores, labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_points(scores, labels) -> tuple:
    """
    ROC step points (fpr, tpr), one per distinct score threshold, from (0, 0) to (1, 1)

    Tied scores move the curve diagonally, which is what makes its area equal the AUROC.
    """
    scores, labels = check_two_classes(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tpr = np.r_[0.0, tp[last_of_group] / tp[-1]]
    fpr = np.r_[0.0, fp[last_of_group] / fp[-1]]
    return fpr, tpr
