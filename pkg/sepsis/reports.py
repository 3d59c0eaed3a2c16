"""
Reports Module
Writes the run's report files and the intermediate stage files other stages read back
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .config import RunConfig
from .errors import SchemaError
from .evaluation import EvalReport, TTestRow, t_test_from_stats
from .features.matrix import format_float

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.json"
COHORT_TTEST_FILE = "cohort_ttest.csv"
IMPORTANCE_FILE = "importance.csv"
ROC_POINTS_FILE = "roc_points.csv"
BOOTSTRAP_FILE = "bootstrap_auc.csv"
SHAP_MEAN_ABS_FILE = "shap_mean_abs.csv"
SHAP_SUMMARY_FILE = "shap_summary.csv"
SELECTED_FEATURES_FILE = "selected_features.txt"
CONFIG_ECHO_FILE = "run_config_echo.json"
SHAP_VALUES_FILE = "shap_values.csv"

REPORT_FILES = (
    METRICS_FILE, COHORT_TTEST_FILE, IMPORTANCE_FILE, ROC_POINTS_FILE, BOOTSTRAP_FILE,
    SHAP_MEAN_ABS_FILE, SHAP_SUMMARY_FILE, SELECTED_FEATURES_FILE, CONFIG_ECHO_FILE,
)

TTEST_HEADER = ["Characteristics", "Train Cohort", "Test Cohort", "T-Stat", "P-Value"]
SUMMARY_STAT_COLUMNS = ["feature", "train_mean", "train_sd", "train_n", "test_mean", "test_sd", "test_n"]


def _write_json(data: dict, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def _write_csv(frame: pd.DataFrame, path):
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def shap_bases(explained: dict) -> dict:
    return {kind: shap.base_value for kind, (shap, _, _) in explained.items()}


def write_metrics(report: EvalReport, path, bases: Optional[dict] = None):
    data = report.to_dict()
    if bases:
        data["shap_base_values"] = dict(bases)
    _write_json(data, path)


def read_shap_bases(path) -> dict:
    """shap_base_values of an existing metrics.json; empty when the file or the block is absent"""
    path = Path(path)
    if not path.exists():
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f).get("shap_base_values", {})


def update_shap_bases(path, bases: dict):
    """Replace the shap_base_values block of an existing metrics.json"""
    path = Path(path)
    if not path.exists():
        return
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    data.pop("shap_base_values", None)
    if bases:
        data["shap_base_values"] = dict(bases)
    _write_json(data, path)


def _fixed(value: float) -> str:
    return format(value, ".3f")


def write_cohort_ttest(rows: Sequence[TTestRow], path):
    """Train/test characteristics as `mean(sd)` cells with t statistic and p-value, 3 decimals"""
    frame = pd.DataFrame({
        "Characteristics": [r.feature for r in rows],
        "Train Cohort": [f"{_fixed(r.train_mean)}({_fixed(r.train_sd)})" for r in rows],
        "Test Cohort": [f"{_fixed(r.test_mean)}({_fixed(r.test_sd)})" for r in rows],
        "T-Stat": [_fixed(r.t) for r in rows],
        "P-Value": [_fixed(r.p) for r in rows],
    }, columns=TTEST_HEADER)
    _write_csv(frame, path)


def write_importance(ranked: Sequence, path):
    """Selection forest importances as (rank, feature, importance), most important first"""
    frame = pd.DataFrame({
        "rank": np.arange(1, len(ranked) + 1),
        "feature": [name for name, _ in ranked],
        "importance": [format_float(value) for _, value in ranked],
    }, columns=["rank", "feature", "importance"])
    _write_csv(frame, path)


def read_importance(path) -> list:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    for name in ("feature", "importance"):
        if name not in frame.columns:
            raise SchemaError(name, "importance")
    return [(name, float(value)) for name, value in zip(frame["feature"], frame["importance"])]


def write_roc_points(report: EvalReport, path):
    parts = [
        pd.DataFrame({"model": kind, "fpr": [format_float(v) for v in ev.roc_fpr],
                      "tpr": [format_float(v) for v in ev.roc_tpr]})
        for kind, ev in report.models.items()
    ]
    frame = pd.concat(parts, ignore_index=True) if parts else pd.DataFrame(columns=["model", "fpr", "tpr"])
    _write_csv(frame[["model", "fpr", "tpr"]], path)


def write_bootstrap(report: EvalReport, path):
    parts = [
        pd.DataFrame({"model": kind, "resample": np.arange(len(ev.bootstrap_samples)),
                      "auroc": [format_float(v) for v in ev.bootstrap_samples]})
        for kind, ev in report.models.items()
    ]
    columns = ["model", "resample", "auroc"]
    frame = pd.concat(parts, ignore_index=True) if parts else pd.DataFrame(columns=columns)
    _write_csv(frame[columns], path)


def write_shap_mean_abs(explained: dict, path):
    """explained: kind -> (ShapMatrix, mean_abs rows, summary records)"""
    rows = [
        {"model": kind, "rank": r.rank, "feature": r.feature, "mean_abs": format_float(r.mean_abs)}
        for kind, (_, table, _) in explained.items() for r in table
    ]
    _write_csv(pd.DataFrame(rows, columns=["model", "rank", "feature", "mean_abs"]), path)


def write_shap_summary(explained: dict, path):
    columns = ["model", "SUBJECT_ID", "feature", "rank", "shap_value", "feature_value"]
    rows = [
        {"model": kind, "SUBJECT_ID": rec.row_id, "feature": rec.feature, "rank": rec.rank,
         "shap_value": format_float(rec.shap_value), "feature_value": format_float(rec.feature_value)}
        for kind, (_, _, records) in explained.items() for rec in records
    ]
    _write_csv(pd.DataFrame(rows, columns=columns), path)


def write_shap_values(explained: dict, columns: Sequence[str], path):
    """Row id x feature attributions per model, with the model's base value"""
    header = ["model", "SUBJECT_ID", "base_value", *columns]
    parts = []
    for kind, (shap, _, _) in explained.items():
        data = {"model": kind, "SUBJECT_ID": list(shap.row_ids), "base_value": format_float(shap.base_value)}
        for j, name in enumerate(columns):
            data[name] = [format_float(v) for v in shap.values[:, j]]
        parts.append(pd.DataFrame(data, columns=header))
    frame = pd.concat(parts, ignore_index=True) if parts else pd.DataFrame(columns=header)
    _write_csv(frame, path)


def write_selected(selected: Sequence[str], path):
    with open(path, "w", encoding="utf-8") as f:
        for name in selected:
            f.write(f"{name}\n")


def read_selected(path) -> list:
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


def write_config_echo(cfg: RunConfig, path):
    _write_json(cfg.to_dict(), path)


def summary_ttest_rows(path, variant: str = "student") -> list:
    """
    Cohort t-test rows from published summary statistics

    Args:
        path: CSV with feature, train_mean, train_sd, train_n, test_mean, test_sd, test_n
        variant: "student" or "welch"
    """
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    for name in SUMMARY_STAT_COLUMNS:
        if name not in frame.columns:
            raise SchemaError(name, "summary statistics")
    rows = []
    for rec in frame.to_dict("records"):
        m1, s1, m2, s2 = (float(rec[k]) for k in ("train_mean", "train_sd", "test_mean", "test_sd"))
        result = t_test_from_stats(m1, s1, int(rec["train_n"]), m2, s2, int(rec["test_n"]), variant)
        rows.append(TTestRow(feature=rec["feature"], train_mean=m1, train_sd=s1, test_mean=m2, test_sd=s2,
                             t=result.t, p=result.p, degenerate=result.degenerate))
    return rows


def emit_reports(report: EvalReport, explained: dict, importances: Sequence, out_dir,
                 selected: Sequence[str], cfg: RunConfig) -> list:
    """
    Write the nine report files

    Args:
        report: Held-out evaluation with the cohort t-test rows
        explained: kind -> (ShapMatrix, mean_abs rows, summary records); empty without tree models
        importances: Ranked (feature, importance) pairs of the selection forest
        out_dir: Target directory
        selected: Selected feature names in rank order
        cfg: Effective configuration echoed verbatim

    Returns:
        The written file names
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics(report, out / METRICS_FILE, shap_bases(explained))
    write_cohort_ttest(report.ttest_rows, out / COHORT_TTEST_FILE)
    write_importance(importances, out / IMPORTANCE_FILE)
    write_roc_points(report, out / ROC_POINTS_FILE)
    write_bootstrap(report, out / BOOTSTRAP_FILE)
    write_shap_mean_abs(explained, out / SHAP_MEAN_ABS_FILE)
    write_shap_summary(explained, out / SHAP_SUMMARY_FILE)
    write_selected(selected, out / SELECTED_FEATURES_FILE)
    write_config_echo(cfg, out / CONFIG_ECHO_FILE)
    logger.info("reports: %d files written to %s", len(REPORT_FILES), out)
    return list(REPORT_FILES)
