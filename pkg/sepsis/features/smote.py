"""
SMOTE Module
Synthetic minority oversampling on segments between a minority row and one of its nearest minority neighbors
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from ..config import SMOTE_K
from ..errors import InputError, ParameterError, RebalanceError
from .matrix import FeatureMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoteDraw:
    """Provenance of synthetic rows, indices into the minority block: s = X[base] + u * (X[neighbor] - X[base])"""

    base: np.ndarray
    neighbor: np.ndarray
    u: np.ndarray


def nearest_minority_neighbors(X_min: np.ndarray, k: int) -> np.ndarray:
    """k nearest other minority rows by Euclidean distance; ties go to the lower row index"""
    distances = cdist(X_min, X_min)
    np.fill_diagonal(distances, np.inf)
    return np.argsort(distances, axis=1, kind="stable")[:, :k]


def smote_samples(X_min: np.ndarray, n_new: int, k: int, rng: np.random.Generator) -> tuple:
    """
    Draw n_new synthetic rows from a minority block

    Returns:
        (synthetic rows, SmoteDraw)
    """
    m = len(X_min)
    if m < 2:
        raise RebalanceError(f"SMOTE needs at least 2 minority rows, got {m}")
    k_eff = min(k, m - 1)
    neighbors = nearest_minority_neighbors(X_min, k_eff)
    base = rng.integers(0, m, size=n_new)
    neighbor = neighbors[base, rng.integers(0, k_eff, size=n_new)]
    u = rng.random(n_new)
    synthetic = X_min[base] + u[:, None] * (X_min[neighbor] - X_min[base])
    return synthetic, SmoteDraw(base=base, neighbor=neighbor, u=u)


def smote_arrays(X: np.ndarray, y: np.ndarray, k: int = SMOTE_K, seed: int = 0) -> tuple:
    """
    Balance (X, y) by oversampling the smaller class

    Original rows come first and unchanged; synthetic rows are appended.

    Returns:
        (X', y', SmoteDraw or None when already balanced)
    """
    if k < 1:
        raise ParameterError(f"SMOTE k must be >= 1, got {k}")
    y = np.asarray(y, dtype=bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == n_neg:
        return X, y, None
    minority_label = n_pos < n_neg
    minority = np.flatnonzero(y == minority_label)
    n_new = abs(n_neg - n_pos)
    synthetic, draw = smote_samples(X[minority], n_new, k, np.random.default_rng(seed))
    X_out = np.vstack([X, synthetic])
    y_out = np.concatenate([y, np.full(n_new, minority_label)])
    return X_out, y_out, draw


def smote_balance(train: FeatureMatrix, k: int = SMOTE_K, seed: int = 0) -> FeatureMatrix:
    """SMOTE on an encoded, scaled training matrix; synthetic rows get subject ids -1, -2, ..."""
    if train.categoricals:
        raise InputError("SMOTE needs an encoded matrix without token columns")
    X, y, draw = smote_arrays(train.values, train.labels, k, seed)
    if draw is None:
        return train
    n_new = len(draw.u)
    n_min = min(int(train.labels.sum()), int((~train.labels).sum()))
    logger.info("SMOTE: %d synthetic rows added (k=%d)", n_new, min(k, n_min - 1))
    return replace(
        train,
        subject_ids=np.concatenate([train.subject_ids, -np.arange(1, n_new + 1)]),
        values=X,
        labels=y,
    )
