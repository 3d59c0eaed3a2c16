"""
Linear Models Module
L2-regularized logistic regression and linear SVM trained by full-batch (sub)gradient descent
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

from ..config import LinearConfig, TrainConfig
from .forest import check_binary

logger = logging.getLogger(__name__)

LOGISTIC = "lr"
SVM = "svm"


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: str
    config: LinearConfig = field(default_factory=LinearConfig)
    history: tuple = ()

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def margins(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Logistic probability; for the SVM, sigmoid of the margin"""
        return expit(self.margins(X))


def logistic_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> tuple:
    """Mean log-loss + (l2/2)||w||^2 and its gradient: (loss, grad_w, grad_b)"""
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))
    error = (expit(z) - y) / len(y)
    return loss, X.T @ error + l2 * w, float(error.sum())


def hinge_objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> tuple:
    """Mean hinge loss with labels mapped to -1/+1, + (l2/2)||w||^2, and a subgradient"""
    s = 2.0 * y - 1.0
    margin = s * (X @ w + b)
    active = margin < 1.0
    loss = float(np.mean(np.maximum(0.0, 1.0 - margin)) + 0.5 * l2 * np.dot(w, w))
    coef = np.where(active, -s, 0.0) / len(y)
    return loss, X.T @ coef + l2 * w, float(coef.sum())


def _descend(objective: Callable, X: np.ndarray, y: np.ndarray, cfg: LinearConfig) -> tuple:
    """Step size step / sqrt(epoch); a step that would increase the objective is rejected"""
    w = np.zeros(X.shape[1])
    b = 0.0
    loss, grad_w, grad_b = objective(w, b, X, y, cfg.l2)
    history = [loss]
    for epoch in range(1, cfg.epochs + 1):
        eta = cfg.step / np.sqrt(epoch)
        w_new = w - eta * grad_w
        b_new = b - eta * grad_b
        loss_new, grad_w_new, grad_b_new = objective(w_new, b_new, X, y, cfg.l2)
        if loss_new <= loss:
            w, b, loss, grad_w, grad_b = w_new, b_new, loss_new, grad_w_new, grad_b_new
        history.append(loss)
    return w, b, tuple(history)


def train_logistic(X: np.ndarray, y: np.ndarray, cfg: TrainConfig = TrainConfig()) -> LinearModel:
    X, y = check_binary(X, y)
    cfg.logistic.validate()
    w, b, history = _descend(logistic_objective, X, y.astype(float), cfg.logistic)
    logger.info("logistic: objective %.4f -> %.4f over %d epochs", history[0], history[-1], cfg.logistic.epochs)
    return LinearModel(weights=w, bias=float(b), kind=LOGISTIC, config=cfg.logistic, history=history)


def train_svm(X: np.ndarray, y: np.ndarray, cfg: TrainConfig = TrainConfig()) -> LinearModel:
    X, y = check_binary(X, y)
    cfg.svm.validate()
    w, b, history = _descend(hinge_objective, X, y.astype(float), cfg.svm)
    logger.info("svm: objective %.4f -> %.4f over %d epochs", history[0], history[-1], cfg.svm.epochs)
    return LinearModel(weights=w, bias=float(b), kind=SVM, config=cfg.svm, history=history)
