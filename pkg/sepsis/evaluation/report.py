"""
Evaluation Report Module
Collects per-model held-out metrics, ROC data, bootstrap samples, CV results and the cohort t-test table
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..config import BOOTSTRAP_B, CI_ALPHA
from .bootstrap import bootstrap_auroc_ci
from .cross_validation import CVResult
from .metrics import auroc, both_class_metrics, roc_points


@dataclass(eq=False)
class ModelEvaluation:
    kind: str
    metrics: dict
    auroc: float
    auroc_ci: tuple
    roc_fpr: np.ndarray
    roc_tpr: np.ndarray
    bootstrap_samples: np.ndarray
    n_skipped: int = 0
    cv: Optional[CVResult] = None

    def to_dict(self) -> dict:
        return {
            "auroc": self.auroc,
            "auroc_ci": list(self.auroc_ci),
            "bootstrap_resamples": int(len(self.bootstrap_samples)),
            "bootstrap_skipped": self.n_skipped,
            "metrics": self.metrics,
            "cv": self.cv.to_dict() if self.cv is not None else None,
        }


@dataclass(eq=False)
class EvalReport:
    models: dict = field(default_factory=dict)
    ttest_rows: list = field(default_factory=list)
    n_train: int = 0
    n_test: int = 0
    ci_alpha: float = CI_ALPHA

    def to_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_test": self.n_test,
            "ci_level": 1.0 - self.ci_alpha,
            "positive_class": "deceased",
            "models": {kind: ev.to_dict() for kind, ev in self.models.items()},
        }


def evaluate_scores(kind: str, scores, labels, B: int = BOOTSTRAP_B, alpha: float = CI_ALPHA, seed: int = 0,
                    progress: bool = False) -> ModelEvaluation:
    """Held-out evaluation of one model's scores; 0.5 is the decision threshold"""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    boot = bootstrap_auroc_ci(scores, labels, B=B, alpha=alpha, seed=seed, progress=progress,
                              desc=f"bootstrap {kind}")
    fpr, tpr = roc_points(scores, labels)
    return ModelEvaluation(
        kind=kind,
        metrics=both_class_metrics(labels, scores >= 0.5),
        auroc=auroc(scores, labels),
        auroc_ci=(boot.lo, boot.hi),
        roc_fpr=fpr,
        roc_tpr=tpr,
        bootstrap_samples=boot.samples,
        n_skipped=boot.n_skipped,
    )
