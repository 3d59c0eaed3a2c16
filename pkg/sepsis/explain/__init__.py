"""
Explain package: path-dependent TreeSHAP, ensemble attribution and report data
"""

from .ensemble import ShapMatrix, ensemble_shap
from .report import MeanAbsRow, SummaryRecord, shap_report
from .tree_shap import conditional_expectation, exact_shapley_oracle, expected_value, tree_shap, tree_shap_matrix

__all__ = [
    "tree_shap", "tree_shap_matrix", "exact_shapley_oracle", "expected_value", "conditional_expectation",
    "ShapMatrix", "ensemble_shap", "MeanAbsRow", "SummaryRecord", "shap_report",
]
