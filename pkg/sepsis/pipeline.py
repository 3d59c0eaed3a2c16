"""
Pipeline Module
Runs ingest -> cohort -> features -> train -> evaluate -> explain -> report, as a whole or stage by stage
"""

from __future__ import annotations

import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from . import reports
from .config import CI_ALPHA, MODEL_KINDS, TREE_MODEL_KINDS, RunConfig
from .data import (
    ADMISSIONS,
    DIAGNOSES_ICD,
    EVENT_TABLES,
    PATIENTS,
    read_cohort,
    read_item_names,
    read_table,
    select_cohort,
    stream_events,
    write_cohort,
)
from .data.synthgen import ITEM_NAMES_FILE
from .data.tables import check_header, table_path
from .errors import InputError, ParameterError, SchemaError, StageError
from .evaluation import EvalReport, cohort_table, cross_validate, evaluate_scores
from .explain import ensemble_shap, shap_report
from .features import (
    FeatureMatrix,
    PreprocessParams,
    aggregate_and_pivot,
    apply_preprocess,
    drop_sparse,
    fit_preprocess,
    fit_selection,
    read_matrix,
    smote_balance,
    stratified_split,
    write_matrix,
)
from .models import predict_scores, train_model
from .models.serialization import load_model, save_model

logger = logging.getLogger(__name__)

COHORT_FILE = "cohort.csv"
FEATURES_FILE = "features.csv"
SPLIT_FILE = "split.csv"
PARAMS_FILE = "preprocess_params.json"
MODELS_DIR = "models"

STAGES = ("ingest", "cohort", "features", "train", "evaluate", "explain", "report")

SEED_PURPOSES = (
    ("split", "selection_smote", "selection_forest", "smote", "cv")
    + tuple(f"train_{kind}" for kind in MODEL_KINDS)
    + tuple(f"bootstrap_{kind}" for kind in MODEL_KINDS)
)


def derive_seeds(seed: int) -> dict:
    """One independent 64-bit seed per purpose, all spawned from the run seed"""
    children = np.random.SeedSequence(seed).spawn(len(SEED_PURPOSES))
    return {name: int(child.generate_state(1, dtype=np.uint64)[0]) for name, child in zip(SEED_PURPOSES, children)}


@contextmanager
def stage(name: str):
    """Log the stage and wrap any failure inside it into a StageError naming it"""
    logger.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


@dataclass
class SourceTables:
    patients: list
    admissions: list
    diagnoses: list
    event_files: dict  # table name -> path
    item_names: dict


@dataclass
class TrainingState:
    """Everything the evaluate and explain stages need from training"""

    train: FeatureMatrix  # raw rows, post sparse filter
    test: FeatureMatrix
    params: PreprocessParams
    ranked: list  # (feature, importance) of the selection forest
    selected: list
    models: dict = field(default_factory=dict)
    matrix: Optional[FeatureMatrix] = None  # full post-filter matrix, for cross-validation

    def selected_rows(self, which: str) -> FeatureMatrix:
        raw = self.train if which == "train" else self.test
        return apply_preprocess(raw, self.params).take_columns(self.selected)


def event_sources(cfg: RunConfig) -> tuple:
    """Header-checked event table paths and the optional itemid name map"""
    data = Path(cfg.data_dir)
    event_files = {}
    for schema in EVENT_TABLES:
        path = table_path(data, schema)
        check_header(path, schema)
        event_files[schema.name] = path
    names_path = data / ITEM_NAMES_FILE
    item_names = read_item_names(names_path) if names_path.exists() else {}
    return event_files, item_names


def ingest(cfg: RunConfig) -> SourceTables:
    data = Path(cfg.data_dir)
    patients = read_table(table_path(data, PATIENTS), PATIENTS)
    admissions = read_table(table_path(data, ADMISSIONS), ADMISSIONS)
    diagnoses = read_table(table_path(data, DIAGNOSES_ICD), DIAGNOSES_ICD)
    event_files, item_names = event_sources(cfg)
    logger.info("ingest: %d patients, %d admissions, %d diagnoses",
                len(patients), len(admissions), len(diagnoses))
    return SourceTables(patients, admissions, diagnoses, event_files, item_names)


def build_cohort(cfg: RunConfig, tables: SourceTables, work_dir) -> list:
    cohort = select_cohort(tables.patients, tables.admissions, tables.diagnoses, cfg.inclusion_scope)
    write_cohort(cohort, Path(work_dir) / COHORT_FILE)
    return cohort


def build_features(cfg: RunConfig, cohort: list, event_files: dict, item_names: dict, work_dir) -> FeatureMatrix:
    """Stream both event tables for the cohort, pivot and drop sparse columns; writes features.csv"""
    if not cohort:
        raise InputError("the cohort is empty")
    subjects = {r.subject_id for r in cohort}
    events = []
    for schema in EVENT_TABLES:
        events.extend(stream_events(event_files[schema.name], subjects, schema))
    matrix = drop_sparse(aggregate_and_pivot(events, cohort, item_names), cfg.missing_threshold)
    write_matrix(matrix, Path(work_dir) / FEATURES_FILE)
    return matrix


def _write_split(train: FeatureMatrix, test: FeatureMatrix, path):
    frame = pd.DataFrame({
        "SUBJECT_ID": np.concatenate([train.subject_ids, test.subject_ids]),
        "PARTITION": ["train"] * train.n_rows + ["test"] * test.n_rows,
    })
    frame.sort_values("SUBJECT_ID", kind="stable").to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def _read_split(matrix: FeatureMatrix, path) -> tuple:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    for name in ("SUBJECT_ID", "PARTITION"):
        if name not in frame.columns:
            raise SchemaError(name, "split")
    partition = dict(zip(frame["SUBJECT_ID"].astype(np.int64), frame["PARTITION"].str.strip()))
    missing = [int(s) for s in matrix.subject_ids if int(s) not in partition]
    if missing:
        raise InputError(f"{len(missing)} feature rows have no partition (first: {missing[0]})")
    is_train = np.array([partition[int(s)] == "train" for s in matrix.subject_ids])
    return matrix.take_rows(np.flatnonzero(is_train)), matrix.take_rows(np.flatnonzero(~is_train))


def train_stage(cfg: RunConfig, matrix: FeatureMatrix, work_dir) -> TrainingState:
    """
    Split, preprocess, select features and train every configured model

    The selection forest sees the SMOTE-balanced full-feature training set when
    selection_on is "balanced", the unbalanced one when it is "raw". The models are trained
    on SMOTE rows generated in the selected space.
    """
    out = Path(work_dir)
    seeds = derive_seeds(cfg.seed)
    tc = cfg.train_config()

    train_raw, test_raw = stratified_split(matrix, cfg.split_ratio, seeds["split"])
    train, _, params = fit_preprocess(train_raw, test_raw)
    ranked, selected = fit_selection(train, cfg.top_k_features, tc, cfg.smote_k, cfg.selection_on == "balanced",
                                     seeds["selection_smote"], seeds["selection_forest"])
    train_sel = train.take_columns(selected)

    balanced = smote_balance(train_sel, cfg.smote_k, seeds["smote"])
    models = {}
    for kind in cfg.models:
        models[kind] = train_model(kind, balanced.values, balanced.labels, replace(tc, seed=seeds[f"train_{kind}"]))
        logger.info("train: %s fitted on %d rows x %d features", kind, balanced.n_rows, balanced.n_features)

    _write_split(train_raw, test_raw, out / SPLIT_FILE)
    params.save(out / PARAMS_FILE)
    reports.write_importance(ranked, out / reports.IMPORTANCE_FILE)
    reports.write_selected(selected, out / reports.SELECTED_FEATURES_FILE)
    (out / MODELS_DIR).mkdir(parents=True, exist_ok=True)
    for kind, model in models.items():
        save_model(model, out / MODELS_DIR / f"{kind}.json")
    return TrainingState(train_raw, test_raw, params, ranked, selected, models, matrix)


def load_training(cfg: RunConfig, work_dir, with_models: bool = True) -> TrainingState:
    """Rebuild the training state from the files the train stage wrote"""
    out = Path(work_dir)
    matrix = read_matrix(out / FEATURES_FILE)
    train, test = _read_split(matrix, out / SPLIT_FILE)
    models = {kind: load_model(out / MODELS_DIR / f"{kind}.json") for kind in cfg.models} if with_models else {}
    return TrainingState(
        train=train,
        test=test,
        params=PreprocessParams.load(out / PARAMS_FILE),
        ranked=reports.read_importance(out / reports.IMPORTANCE_FILE),
        selected=reports.read_selected(out / reports.SELECTED_FEATURES_FILE),
        models=models,
        matrix=matrix,
    )


def cohort_ttest(cfg: RunConfig, state: TrainingState) -> list:
    """t-test rows on imputed, encoded, unscaled train/test values of the selected features"""
    train = apply_preprocess(state.train, state.params, scaled=False).take_columns(state.selected)
    test = apply_preprocess(state.test, state.params, scaled=False).take_columns(state.selected)
    return cohort_table(train, test, cfg.ttest_variant)


def evaluate_stage(cfg: RunConfig, state: TrainingState) -> EvalReport:
    """Held-out metrics with bootstrap CIs for every model, optional cross-validation and the cohort table"""
    seeds = derive_seeds(cfg.seed)
    test = state.selected_rows("test")
    report = EvalReport(n_train=state.train.n_rows, n_test=state.test.n_rows, ci_alpha=CI_ALPHA)
    for kind, model in state.models.items():
        scores = predict_scores(model, test.values)
        evaluation = evaluate_scores(kind, scores, test.labels, B=cfg.bootstrap_b, alpha=CI_ALPHA,
                                     seed=seeds[f"bootstrap_{kind}"], progress=cfg.progress)
        if cfg.cv_folds > 0:
            evaluation.cv = cross_validate(state.matrix, kind, cfg.train_config(), cfg.cv_folds, seeds["cv"],
                                           top_k=cfg.top_k_features, smote_k=cfg.smote_k,
                                           selection_on=cfg.selection_on)
        report.models[kind] = evaluation
        logger.info("evaluate: %s AUROC %.4f [%.4f, %.4f]", kind, evaluation.auroc, *evaluation.auroc_ci)
    report.ttest_rows = cohort_ttest(cfg, state)
    return report


def explain_stage(cfg: RunConfig, state: TrainingState, work_dir=None) -> dict:
    """
    SHAP for the tree models on the first shap_max_rows held-out rows

    Returns:
        kind -> (ShapMatrix, mean_abs rows, summary records); writes shap_values.csv when work_dir is given
    """
    test = state.selected_rows("test")
    rows = test.take_rows(np.arange(min(cfg.shap_max_rows, test.n_rows)))
    explained = {}
    for kind, model in state.models.items():
        if kind not in TREE_MODEL_KINDS:
            continue
        shap = ensemble_shap(model, rows.values, state.selected, rows.subject_ids.tolist(), n_jobs=cfg.n_jobs)
        target = model.margin(rows.values) if shap.scale == "margin" else model.predict_scores(rows.values)
        logger.debug("explain: %s max local accuracy error %.3g", kind,
                     float(np.max(np.abs(shap.reconstructed() - target))) if rows.n_rows else 0.0)
        table, records = shap_report(shap, rows.values, cfg.shap_top_n)
        explained[kind] = (shap, table, records)
    if not explained:
        logger.warning("explain: no tree models configured, SHAP files will be empty")
    if work_dir is not None:
        reports.write_shap_values(explained, state.selected, Path(work_dir) / reports.SHAP_VALUES_FILE)
    return explained


def _publish(staging: Path, out: Path):
    """Move every staged file into the output directory"""
    out.mkdir(parents=True, exist_ok=True)
    for src in sorted(p for p in staging.rglob("*") if p.is_file()):
        target = out / src.relative_to(staging)
        target.parent.mkdir(parents=True, exist_ok=True)
        os.replace(src, target)


def run_pipeline(cfg: RunConfig) -> EvalReport:
    """
    Full run into a staging directory next to cfg.out_dir

    Files are moved into cfg.out_dir only after every stage succeeded; on failure the
    staging directory is removed and the StageError naming the failed stage propagates.
    """
    cfg.validate(check_paths=True)
    out = Path(cfg.out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{out.name}.staging-", dir=out.parent))
    try:
        with stage("ingest"):
            tables = ingest(cfg)
        with stage("cohort"):
            cohort = build_cohort(cfg, tables, staging)
        with stage("features"):
            matrix = build_features(cfg, cohort, tables.event_files, tables.item_names, staging)
        with stage("train"):
            state = train_stage(cfg, matrix, staging)
        with stage("evaluate"):
            report = evaluate_stage(cfg, state)
        with stage("explain"):
            explained = explain_stage(cfg, state, staging)
        with stage("report"):
            reports.emit_reports(report, explained, state.ranked, staging, state.selected, cfg)
        _publish(staging, out)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    logger.info("run complete: outputs in %s", out)
    return report


def run_stage(name: str, cfg: RunConfig, summary_path: Optional[str] = None):
    """
    Rerun one stage in place, reading the previous stages' files from cfg.out_dir

    Args:
        name: cohort, features, train, evaluate, explain or ttest-report
        summary_path: For ttest-report, a summary-statistics CSV to test instead of the split
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if name == "cohort":
        with stage("ingest"):
            tables = ingest(cfg)
        with stage("cohort"):
            return build_cohort(cfg, tables, out)
    if name == "features":
        with stage("ingest"):
            event_files, item_names = event_sources(cfg)
        with stage("features"):
            return build_features(cfg, read_cohort(out / COHORT_FILE), event_files, item_names, out)
    if name == "train":
        with stage("train"):
            return train_stage(cfg, read_matrix(out / FEATURES_FILE), out)
    if name == "evaluate":
        with stage("evaluate"):
            report = evaluate_stage(cfg, load_training(cfg, out))
            bases = reports.read_shap_bases(out / reports.METRICS_FILE)
            reports.write_metrics(report, out / reports.METRICS_FILE, bases)
            reports.write_cohort_ttest(report.ttest_rows, out / reports.COHORT_TTEST_FILE)
            reports.write_roc_points(report, out / reports.ROC_POINTS_FILE)
            reports.write_bootstrap(report, out / reports.BOOTSTRAP_FILE)
            return report
    if name == "explain":
        with stage("explain"):
            explained = explain_stage(cfg, load_training(cfg, out), out)
            reports.write_shap_mean_abs(explained, out / reports.SHAP_MEAN_ABS_FILE)
            reports.write_shap_summary(explained, out / reports.SHAP_SUMMARY_FILE)
            reports.update_shap_bases(out / reports.METRICS_FILE, reports.shap_bases(explained))
            return explained
    if name == "ttest-report":
        with stage("ttest-report"):
            if summary_path:
                rows = reports.summary_ttest_rows(summary_path, cfg.ttest_variant)
            else:
                rows = cohort_ttest(cfg, load_training(cfg, out, with_models=False))
            reports.write_cohort_ttest(rows, out / reports.COHORT_TTEST_FILE)
            return rows
    raise ParameterError(f"unknown stage {name!r}")
