"""
Feature Selection Module
Ranks columns by forest importance and keeps the top k
"""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from ..config import TOP_K_FEATURES, TrainConfig
from ..errors import InputError, ParameterError
from ..models.forest import forest_importance, train_forest
from .matrix import FeatureMatrix
from .smote import smote_balance

logger = logging.getLogger(__name__)


def rank_features(columns, importances) -> list:
    """(name, importance) sorted by descending importance, ties by name"""
    importances = np.asarray(importances, dtype=float)
    if len(importances) != len(columns):
        raise InputError(f"{len(importances)} importances for {len(columns)} columns")
    return sorted(zip(columns, importances.tolist()), key=lambda item: (-item[1], item[0]))


def select_top_k(matrix: FeatureMatrix, importances, k: int = TOP_K_FEATURES) -> FeatureMatrix:
    """Keep the k most important columns, most important first"""
    if k <= 0:
        raise ParameterError(f"k must be positive, got {k}")
    if k > matrix.n_features:
        logger.warning("top-k: k=%d exceeds %d columns, keeping all", k, matrix.n_features)
        k = matrix.n_features
    ranked = rank_features(matrix.columns, importances)
    return matrix.take_columns([name for name, _ in ranked[:k]])


def fit_selection(train: FeatureMatrix, k: int, cfg: TrainConfig, smote_k: int, balanced: bool,
                  smote_seed: int, forest_seed: int) -> tuple:
    """
    Fit the selection forest on training rows only and rank their columns

    Args:
        train: Encoded, scaled training matrix
        k: Columns to keep
        cfg: Forest hyperparameters and job count; the seed is replaced by forest_seed
        smote_k: SMOTE neighbors when balanced
        balanced: Fit the forest on the SMOTE-balanced rows instead of the raw ones

    Returns:
        (ranked (name, importance) pairs, selected names most important first)
    """
    rows = smote_balance(train, smote_k, smote_seed) if balanced else train
    forest = train_forest(rows.values, rows.labels, replace(cfg, seed=forest_seed))
    importances = forest_importance(forest)
    ranked = rank_features(train.columns, importances)
    return ranked, list(select_top_k(train, importances, k).columns)
