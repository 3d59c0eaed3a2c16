"""
Features package: aggregation, leakage-safe preprocessing, SMOTE and top-k selection
"""

from .aggregate import aggregate_and_pivot
from .matrix import FeatureMatrix, read_matrix, write_matrix
from .preprocess import (
    PreprocessParams,
    apply_encoding,
    apply_impute,
    apply_preprocess,
    apply_scale,
    drop_sparse,
    encode_categoricals,
    fit_apply_impute,
    fit_apply_scale,
    fit_preprocess,
    stratified_split,
)
from .selection import fit_selection, rank_features, select_top_k
from .smote import smote_arrays, smote_balance, smote_samples

__all__ = [
    "FeatureMatrix", "read_matrix", "write_matrix",
    "aggregate_and_pivot", "drop_sparse", "stratified_split",
    "fit_apply_impute", "encode_categoricals", "fit_apply_scale", "fit_preprocess",
    "apply_impute", "apply_encoding", "apply_scale", "apply_preprocess", "PreprocessParams",
    "smote_balance", "smote_arrays", "smote_samples",
    "rank_features", "select_top_k", "fit_selection",
]
