"""
Cross-Validation Module
Stratified k-fold evaluation with preprocessing and SMOTE refit inside every training fold
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from ..config import CV_FOLDS, SMOTE_K, TrainConfig
from ..errors import ParameterError
from ..features.matrix import FeatureMatrix
from ..features.preprocess import fit_preprocess
from ..features.selection import fit_selection
from ..features.smote import smote_arrays
from ..models import train_model
from .metrics import auroc, confusion_and_metrics

logger = logging.getLogger(__name__)

FOLD_METRICS = ("accuracy", "precision", "recall", "f1", "auroc")


@dataclass(frozen=True)
class CVResult:
    folds: tuple  # one dict per fold: fold, n_train, n_test, positives, + FOLD_METRICS
    mean: dict
    sd: dict

    def to_dict(self) -> dict:
        return {"folds": list(self.folds), "mean": self.mean, "sd": self.sd}


def stratified_folds(labels, folds: int, seed: int = 0) -> np.ndarray:
    """
    Fold id per row

    Each class is shuffled, the positives' then the negatives' permutations are concatenated
    and dealt round-robin, so per-class fold counts differ by at most one.
    """
    labels = np.asarray(labels, dtype=bool)
    if folds < 2:
        raise ParameterError(f"folds must be >= 2, got {folds}")
    pos, neg = np.flatnonzero(labels), np.flatnonzero(~labels)
    if min(len(pos), len(neg)) < folds:
        raise ParameterError(f"each class needs at least {folds} rows (positives={len(pos)}, negatives={len(neg)})")
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(pos), rng.permutation(neg)])
    assignment = np.empty(len(labels), dtype=np.int64)
    assignment[order] = np.arange(len(order)) % folds
    return assignment


def _fold_seed(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def cross_validate(matrix: FeatureMatrix, family: Union[str, Callable], cfg: TrainConfig = TrainConfig(),
                   folds: int = CV_FOLDS, seed: int = 0, top_k: Optional[int] = None,
                   smote_k: int = SMOTE_K, selection_on: str = "balanced") -> CVResult:
    """
    Evaluate one learner family on stratified folds

    Args:
        matrix: Unprocessed matrix (missing cells, token columns) after the sparse filter
        family: Model kind name, or a callable (X, y, cfg) -> model with predict_scores
        cfg: Learner hyperparameters; the seed is replaced per fold
        folds: Number of folds
        seed: Fold assignment and per-fold stream seed
        top_k: When set, a selection forest fitted on each training fold keeps its top_k columns
        smote_k: SMOTE neighbors inside each training fold
        selection_on: "balanced" fits the selection forest on SMOTE rows, "raw" on the fold rows

    Returns:
        Per-fold metrics plus their mean and sample standard deviation
    """
    assignment = stratified_folds(matrix.labels, folds, seed)
    trainer = (lambda X, y, c: train_model(family, X, y, c)) if isinstance(family, str) else family
    streams = np.random.SeedSequence(seed).spawn(folds)
    rows = []
    for fold, seq in enumerate(streams):
        fold_seed = _fold_seed(seq)
        test_mask = assignment == fold
        train, test = matrix.take_rows(np.flatnonzero(~test_mask)), matrix.take_rows(np.flatnonzero(test_mask))
        train, test, _ = fit_preprocess(train, test)
        if top_k is not None:
            smote_seq, forest_seq = seq.spawn(2)
            _, selected = fit_selection(train, top_k, cfg, smote_k, selection_on == "balanced",
                                        _fold_seed(smote_seq), _fold_seed(forest_seq))
            train, test = train.take_columns(selected), test.take_columns(selected)
        X, y, _ = smote_arrays(train.values, train.labels, smote_k, fold_seed)
        model = trainer(X, y, replace(cfg, seed=fold_seed))
        scores = model.predict_scores(test.values)
        metrics = confusion_and_metrics(test.labels, scores >= 0.5)
        rows.append({
            "fold": fold,
            "n_train": int(len(y)),
            "n_test": int(test.n_rows),
            "positives": int(test.labels.sum()),
            "accuracy": metrics.accuracy,
            "precision": metrics.precision,
            "recall": metrics.recall,
            "f1": metrics.f1,
            "auroc": auroc(scores, test.labels),
        })
    mean = {m: float(np.mean([r[m] for r in rows])) for m in FOLD_METRICS}
    sd = {m: float(np.std([r[m] for r in rows], ddof=1)) for m in FOLD_METRICS}
    name = family if isinstance(family, str) else getattr(family, "__name__", "custom")
    logger.info("cv %s: %d folds, AUROC %.4f +/- %.4f", name, folds, mean["auroc"], sd["auroc"])
    return CVResult(folds=tuple(rows), mean=mean, sd=sd)
