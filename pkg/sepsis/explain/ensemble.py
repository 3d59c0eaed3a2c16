"""
Ensemble SHAP Module
Combines per-tree attributions for forests (probability scale) and boosting (margin scale)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed

from ..errors import ExplanationError, InputError
from ..models.boosting import BoostModel
from ..models.forest import ForestModel
from .tree_shap import tree_shap_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ShapMatrix:
    """Attributions phi (rows x features) with base + phi.sum(1) equal to the explained output"""

    values: np.ndarray
    base_value: float
    columns: tuple = ()
    row_ids: tuple = ()
    scale: str = "probability"

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def reconstructed(self) -> np.ndarray:
        return self.base_value + self.values.sum(axis=1)


def _per_tree(trees: Sequence, X: np.ndarray, n_jobs: int) -> list:
    return Parallel(n_jobs=n_jobs)(delayed(tree_shap_matrix)(tree, X) for tree in trees)


def ensemble_shap(model, X: np.ndarray, columns: Sequence[str] = (), row_ids: Sequence = (),
                  n_jobs: int = 1) -> ShapMatrix:
    """
    Explain a tree ensemble on every row of X

    Args:
        model: ForestModel or BoostModel
        X: Rows in the model's (selected, scaled) feature space
        columns: Feature names carried into the result
        row_ids: Subject ids carried into the result
        n_jobs: joblib workers over trees; results are combined in tree order

    Returns:
        ShapMatrix on the probability scale for forests, on the margin scale for boosting
    """
    X = np.asarray(X, dtype=float)
    if isinstance(model, ForestModel):
        if X.ndim != 2 or X.shape[1] != model.n_features:
            raise InputError(f"model expects {model.n_features} features, got shape {X.shape}")
        parts = _per_tree(model.trees, X, n_jobs)
        phi = np.mean([p for p, _ in parts], axis=0)
        base = float(np.mean([b for _, b in parts]))
        scale = "probability"
    elif isinstance(model, BoostModel):
        if X.ndim != 2 or X.shape[1] != model.n_features:
            raise InputError(f"model expects {model.n_features} features, got shape {X.shape}")
        phi = np.zeros(X.shape)
        base = model.init
        for p, b in _per_tree(model.trees, X, n_jobs):
            phi += model.learning_rate * p
            base += model.learning_rate * b
        scale = "margin"
    else:
        kind = getattr(model, "kind", type(model).__name__)
        raise ExplanationError(f"SHAP explanations are available for tree ensembles only (rf, gb), not {kind!r}")
    logger.info("shap %s: %d rows x %d features on the %s scale",
                getattr(model, "kind", "?"), X.shape[0], X.shape[1], scale)
    return ShapMatrix(values=phi, base_value=float(base), columns=tuple(columns),
                      row_ids=tuple(row_ids), scale=scale)
