"""
Random Forest Module
Bootstrap-aggregated Gini trees with per-node feature sampling and impurity importance
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..config import ForestConfig, TrainConfig
from ..errors import InputError
from .tree import GINI, Tree, grow_tree

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple
    n_features: int
    config: ForestConfig = field(default_factory=ForestConfig)
    kind: str = "rf"

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Mean positive-leaf frequency over trees"""
        X = np.asarray(X, dtype=float)
        total = np.zeros(len(X))
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def check_binary(X: np.ndarray, y: np.ndarray, min_rows: int = 1):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2 or len(X) < min_rows:
        raise InputError(f"training needs a 2-D matrix with at least {min_rows} rows")
    if len(y) != len(X):
        raise InputError(f"{len(y)} labels for {len(X)} rows")
    return X, y


def _fit_tree(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, mtry: int, seed_seq: np.random.SeedSequence) -> Tree:
    rng = np.random.default_rng(seed_seq)
    n = len(X)
    rows = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
    Xb, yb = X[rows], y[rows]
    return grow_tree(Xb, yb, yb.astype(float), GINI, cfg.max_depth, cfg.min_leaf, mtry, rng,
                     leaf_value=lambda idx: float(yb[idx].mean()))


def train_forest(X: np.ndarray, y: np.ndarray, cfg: TrainConfig = TrainConfig()) -> ForestModel:
    """
    Fit cfg.forest.n_trees trees

    Tree t draws from its own stream SeedSequence(cfg.seed).spawn(n_trees)[t], so the
    forest is the same for any cfg.n_jobs.
    """
    X, y = check_binary(X, y, min_rows=2)
    if y.all() or not y.any():
        raise InputError("forest training needs both classes")
    cfg.forest.validate()
    mtry = cfg.forest.resolve_mtry(X.shape[1])
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.forest.n_trees)
    trees = Parallel(n_jobs=cfg.n_jobs)(
        delayed(_fit_tree)(X, y, cfg.forest, mtry, seq) for seq in streams
    )
    logger.info("forest: %d trees, mtry=%d, mean depth %.1f",
                len(trees), mtry, float(np.mean([t.depth for t in trees])))
    return ForestModel(trees=tuple(trees), n_features=X.shape[1], config=cfg.forest)


def tree_importance(tree: Tree) -> np.ndarray:
    """Sum of (cover / root cover) * impurity decrease per split feature"""
    out = np.zeros(tree.n_features)
    internal = np.flatnonzero(tree.feature >= 0)
    np.add.at(out, tree.feature[internal], tree.cover[internal] / tree.cover[0] * tree.impurity_decrease[internal])
    return out


def forest_importance(model: ForestModel) -> np.ndarray:
    """Mean decrease in impurity averaged over trees, normalized to sum 1 (all zeros without splits)"""
    total = np.mean([tree_importance(t) for t in model.trees], axis=0)
    mass = total.sum()
    if mass <= 0:
        return np.zeros(model.n_features)
    return total / mass
