"""
SHAP Report Module
Mean absolute attribution ranking and per-sample summary records for the top features
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import SHAP_TOP_N
from ..errors import InputError
from .ensemble import ShapMatrix


@dataclass(frozen=True)
class MeanAbsRow:
    feature: str
    rank: int
    mean_abs: float


@dataclass(frozen=True)
class SummaryRecord:
    row_id: int
    feature: str
    rank: int
    shap_value: float
    feature_value: float  # standardized within the explained rows


def _standardize(column: np.ndarray) -> np.ndarray:
    sd = column.std()
    if sd == 0:
        return np.zeros_like(column)
    return (column - column.mean()) / sd


def shap_report(shap: ShapMatrix, X: np.ndarray, top_n: int = SHAP_TOP_N) -> tuple:
    """
    Returns:
        (mean_abs rows sorted by descending mean |phi|, ties by name;
         summary records for the top min(top_n, p) features, one per explained row)
    """
    X = np.asarray(X, dtype=float)
    if X.shape != shap.values.shape:
        raise InputError(f"attributions {shap.values.shape} and feature rows {X.shape} are not aligned")
    n, p = X.shape
    columns = shap.columns or tuple(f"f{j}" for j in range(p))
    row_ids = shap.row_ids or tuple(range(n))
    mean_abs = np.abs(shap.values).mean(axis=0) if n else np.zeros(p)
    order = sorted(range(p), key=lambda j: (-mean_abs[j], columns[j]))
    table = [MeanAbsRow(feature=columns[j], rank=r + 1, mean_abs=float(mean_abs[j])) for r, j in enumerate(order)]

    records = []
    for r, j in enumerate(order[:max(0, min(top_n, p))]):
        standardized = _standardize(X[:, j])
        for i in range(n):
            records.append(SummaryRecord(
                row_id=int(row_ids[i]),
                feature=columns[j],
                rank=r + 1,
                shap_value=float(shap.values[i, j]),
                feature_value=float(standardized[i]),
            ))
    return table, records
