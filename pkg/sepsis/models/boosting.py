"""
Gradient Boosting Module
Binomial log-loss boosting with squared-error trees on residuals and Newton leaf values
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..config import NEWTON_DENOMINATOR_FLOOR, BoostConfig, TrainConfig
from ..errors import InputError
from .forest import check_binary
from .tree import SQUARED_ERROR, grow_tree

logger = logging.getLogger(__name__)


def log_loss(y: np.ndarray, margin: np.ndarray) -> float:
    """Mean binomial log-loss of margins F, computed as log(1 + e^F) - yF"""
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


@dataclass(frozen=True, eq=False)
class BoostModel:
    init: float
    trees: tuple
    learning_rate: float
    n_features: int
    config: BoostConfig = field(default_factory=BoostConfig)
    loss_history: tuple = ()
    kind: str = "gb"

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.full(len(X), self.init)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        return expit(self.margin(X))


def train_gboost(X: np.ndarray, y: np.ndarray, cfg: TrainConfig = TrainConfig()) -> BoostModel:
    """
    Fit cfg.boosting.rounds trees

    Starts from the log-odds of the base rate; each round fits a depth-limited tree to
    y - sigmoid(F) and sets leaf values to sum(r) / sum(p(1 - p)). `loss_history` holds the
    training log-loss before the first round and after every round.
    """
    X, y = check_binary(X, y)
    if y.all() or not y.any():
        raise InputError("boosting needs both classes")
    bc = cfg.boosting
    bc.validate()
    target = y.astype(float)
    base_rate = target.mean()
    init = float(np.log(base_rate / (1.0 - base_rate)))
    F = np.full(len(X), init)
    history = [log_loss(target, F)]
    trees = []

    for _ in range(bc.rounds):
        p = expit(F)
        residual = target - p
        hessian = p * (1.0 - p)

        def newton_step(idx, residual=residual, hessian=hessian):
            return float(residual[idx].sum() / max(hessian[idx].sum(), NEWTON_DENOMINATOR_FLOOR))

        tree = grow_tree(X, y, residual, SQUARED_ERROR, bc.depth, bc.min_leaf, None, None, newton_step)
        trees.append(tree)
        F = F + bc.learning_rate * tree.predict(X)
        history.append(log_loss(target, F))

    logger.info("boosting: %d rounds, training log-loss %.4f -> %.4f", bc.rounds, history[0], history[-1])
    return BoostModel(init=init, trees=tuple(trees), learning_rate=bc.learning_rate, n_features=X.shape[1],
                      config=bc, loss_history=tuple(history))
