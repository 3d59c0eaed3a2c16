"""
Models package: five from-scratch learner families behind one scoring interface
"""

import numpy as np

from ..config import TrainConfig
from ..errors import InputError, ParameterError
from .boosting import BoostModel, train_gboost
from .forest import ForestModel, forest_importance, train_forest
from .knn import KnnModel, train_knn
from .linear import LinearModel, logistic_objective, train_logistic, train_svm
from .serialization import load_model, model_from_dict, model_to_dict, save_model
from .tree import LeafNode, SplitNode, Tree, TreeNode, train_tree

TRAINERS = {
    "rf": train_forest,
    "gb": train_gboost,
    "lr": train_logistic,
    "svm": train_svm,
    "knn": train_knn,
}


def train_model(kind: str, X, y, cfg: TrainConfig = TrainConfig()):
    """Train one model family by its short name (rf, gb, lr, svm, knn)"""
    if kind not in TRAINERS:
        raise ParameterError(f"unknown model kind {kind!r}")
    return TRAINERS[kind](X, y, cfg)


def predict_scores(model, X) -> np.ndarray:
    """Scores in [0, 1]; 0.5 is the class threshold (margin 0 for the SVM)"""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise InputError(f"model expects {model.n_features} features, got shape {X.shape}")
    return model.predict_scores(X)


__all__ = [
    "Tree", "TreeNode", "LeafNode", "SplitNode", "train_tree",
    "ForestModel", "train_forest", "forest_importance",
    "BoostModel", "train_gboost",
    "LinearModel", "train_logistic", "train_svm", "logistic_objective",
    "KnnModel", "train_knn",
    "TRAINERS", "train_model", "predict_scores",
    "save_model", "load_model", "model_to_dict", "model_from_dict",
]
