"""
Evaluation package: metrics, AUROC bootstrap, stratified cross-validation and cohort t-tests
"""

from .bootstrap import BootstrapResult, bootstrap_auroc_ci
from .cross_validation import CVResult, cross_validate, stratified_folds
from .metrics import (
    ClassMetrics,
    ConfusionCounts,
    auroc,
    both_class_metrics,
    confusion_and_metrics,
    f1_score,
    roc_points,
)
from .report import EvalReport, ModelEvaluation, evaluate_scores
from .ttest import TTestResult, TTestRow, cohort_table, t_test, t_test_from_stats

__all__ = [
    "ConfusionCounts", "ClassMetrics", "confusion_and_metrics", "both_class_metrics", "f1_score",
    "auroc", "roc_points", "BootstrapResult", "bootstrap_auroc_ci",
    "CVResult", "cross_validate", "stratified_folds",
    "TTestResult", "TTestRow", "t_test", "t_test_from_stats", "cohort_table",
    "EvalReport", "ModelEvaluation", "evaluate_scores",
]
