"""
Nearest Neighbors Module
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ..config import KnnConfig, TrainConfig
from ..errors import ParameterError
from .forest import check_binary

QUERY_BLOCK_ROWS = 1024


@dataclass(frozen=True, eq=False)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    config: KnnConfig = field(default_factory=KnnConfig)
    kind: str = "knn"

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def neighbors(self, Q: np.ndarray) -> np.ndarray:
        """Indices of the k nearest training rows; equal distances go to the lower row index"""
        Q = np.asarray(Q, dtype=float)
        out = np.empty((len(Q), self.k), dtype=np.int64)
        for start in range(0, len(Q), QUERY_BLOCK_ROWS):
            block = cdist(Q[start:start + QUERY_BLOCK_ROWS], self.X)
            out[start:start + QUERY_BLOCK_ROWS] = np.argsort(block, axis=1, kind="stable")[:, :self.k]
        return out

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Fraction of positive labels among the k nearest rows"""
        return self.y[self.neighbors(X)].mean(axis=1)


def train_knn(X: np.ndarray, y: np.ndarray, cfg: TrainConfig = TrainConfig()) -> KnnModel:
    X, y = check_binary(X, y)
    cfg.knn.validate()
    if cfg.knn.k > len(X):
        raise ParameterError(f"knn.k={cfg.knn.k} exceeds {len(X)} training rows")
    return KnnModel(X=X.copy(), y=y.astype(float), k=cfg.knn.k, config=cfg.knn)
