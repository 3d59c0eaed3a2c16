from __future__ import annotations

import json
import shutil
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from conftest import make_matrix, make_run_config, write_csv
from sepsis import reports
from sepsis.errors import EXIT_DATA, EXIT_PIPELINE, ParameterError, StageError
from sepsis.features import stratified_split
from sepsis.pipeline import (
    COHORT_FILE,
    FEATURES_FILE,
    MODELS_DIR,
    PARAMS_FILE,
    SEED_PURPOSES,
    SPLIT_FILE,
    derive_seeds,
    run_pipeline,
    run_stage,
    stage,
    train_stage,
)


@pytest.fixture(scope="module")
def finished_run(synth_dir, tmp_path_factory):
    cfg = make_run_config(synth_dir, tmp_path_factory.mktemp("run") / "out")
    report = run_pipeline(cfg)
    return cfg, report


def reports_dir(cfg) -> Path:
    return Path(cfg.out_dir)


def _read(cfg, name) -> bytes:
    return (reports_dir(cfg) / name).read_bytes()


def test_run_writes_every_report(finished_run):
    cfg, _ = finished_run
    out = reports_dir(cfg)
    for name in reports.REPORT_FILES + (COHORT_FILE, FEATURES_FILE, SPLIT_FILE, PARAMS_FILE):
        assert (out / name).is_file(), name
    for kind in cfg.models:
        assert (out / MODELS_DIR / f"{kind}.json").is_file()
    assert not any(p.name.startswith(f".{out.name}.staging-") for p in out.parent.iterdir())


def test_emit_reports_without_explanations(finished_run, tmp_path):
    cfg, report = finished_run
    written = reports.emit_reports(report, {}, [("a", 0.7), ("b", 0.3)], tmp_path / "r", ["a"], cfg)
    assert written == list(reports.REPORT_FILES)
    assert "shap_base_values" not in json.loads((tmp_path / "r" / reports.METRICS_FILE).read_text())
    assert (tmp_path / "r" / reports.SHAP_MEAN_ABS_FILE).read_text() == "model,rank,feature,mean_abs\n"
    assert (tmp_path / "r" / reports.SELECTED_FEATURES_FILE).read_text() == "a\n"
    assert reports.read_importance(tmp_path / "r" / reports.IMPORTANCE_FILE) == [("a", 0.7), ("b", 0.3)]


def test_metrics_document(finished_run):
    cfg, report = finished_run
    data = json.loads(_read(cfg, reports.METRICS_FILE))
    assert set(data["models"]) == set(cfg.models)
    assert set(data["shap_base_values"]) == {"rf", "gb"}
    for kind, entry in data["models"].items():
        lo, hi = entry["auroc_ci"]
        assert 0.0 <= lo <= entry["auroc"] <= hi <= 1.0
        assert entry["auroc"] == report.models[kind].auroc
        assert len(entry["cv"]["folds"]) == cfg.cv_folds
    assert data["n_train"] + data["n_test"] == len(pd.read_csv(reports_dir(cfg) / FEATURES_FILE))


def test_signal_is_detected(finished_run):
    _, report = finished_run
    assert report.models["rf"].auroc > 0.7
    assert report.models["lr"].auroc > 0.7


def test_report_tables(finished_run):
    cfg, _ = finished_run
    out = reports_dir(cfg)
    selected = reports.read_selected(out / reports.SELECTED_FEATURES_FILE)
    assert len(selected) == cfg.top_k_features

    ttest = pd.read_csv(out / reports.COHORT_TTEST_FILE, dtype=str)
    assert list(ttest.columns) == list(reports.TTEST_HEADER)
    assert ttest["Characteristics"].tolist() == selected
    assert ttest["Train Cohort"].str.fullmatch(r"-?\d+\.\d{3}\(\d+\.\d{3}\)").all()

    boot = pd.read_csv(out / reports.BOOTSTRAP_FILE)
    assert boot.groupby("model").size().max() <= cfg.bootstrap_b
    assert boot["auroc"].between(0.0, 1.0).all()

    roc = pd.read_csv(out / reports.ROC_POINTS_FILE)
    assert set(roc["model"]) == set(cfg.models)

    mean_abs = pd.read_csv(out / reports.SHAP_MEAN_ABS_FILE)
    assert set(mean_abs["model"]) == {"rf", "gb"}
    assert (mean_abs.groupby("model").size() == len(selected)).all()
    summary = pd.read_csv(out / reports.SHAP_SUMMARY_FILE)
    n_rows = min(cfg.shap_max_rows, json.loads(_read(cfg, reports.METRICS_FILE))["n_test"])
    assert len(summary) == 2 * n_rows * min(cfg.shap_top_n, len(selected))

    echo = json.loads(_read(cfg, reports.CONFIG_ECHO_FILE))
    assert echo["seed"] == cfg.seed and echo["train"]["seed"] == cfg.seed


def test_shap_values_reconstruct_scores(finished_run):
    cfg, _ = finished_run
    values = pd.read_csv(reports_dir(cfg) / reports.SHAP_VALUES_FILE)
    rf = values[values["model"] == "rf"]
    features = [c for c in values.columns if c not in ("model", "SUBJECT_ID", "base_value")]
    reconstructed = rf["base_value"] + rf[features].sum(axis=1)
    assert reconstructed.between(-1e-6, 1.0 + 1e-6).all()


def test_same_seed_same_bytes(finished_run, tmp_path):
    cfg, _ = finished_run
    again = replace(cfg, out_dir=str(tmp_path / "again"))
    run_pipeline(again)
    for name in reports.REPORT_FILES:
        if name == reports.CONFIG_ECHO_FILE:
            continue
        assert (tmp_path / "again" / name).read_bytes() == _read(cfg, name), name


def test_stage_reruns_reproduce_the_run(finished_run, tmp_path):
    cfg, _ = finished_run
    copy = tmp_path / "copy"
    shutil.copytree(reports_dir(cfg), copy)
    rerun = replace(cfg, out_dir=str(copy))
    run_stage("evaluate", rerun)
    for name in (reports.METRICS_FILE, reports.COHORT_TTEST_FILE, reports.ROC_POINTS_FILE, reports.BOOTSTRAP_FILE):
        assert (copy / name).read_bytes() == _read(cfg, name), name
    run_stage("explain", rerun)
    for name in (reports.METRICS_FILE, reports.SHAP_MEAN_ABS_FILE, reports.SHAP_SUMMARY_FILE,
                 reports.SHAP_VALUES_FILE):
        assert (copy / name).read_bytes() == _read(cfg, name), name


def test_cohort_and_features_reruns(finished_run, tmp_path):
    cfg, _ = finished_run
    rerun = replace(cfg, out_dir=str(tmp_path / "stages"))
    cohort = run_stage("cohort", rerun)
    matrix = run_stage("features", rerun)
    assert len(cohort) == matrix.n_rows
    for name in (COHORT_FILE, FEATURES_FILE):
        assert (tmp_path / "stages" / name).read_bytes() == _read(cfg, name)


def test_ttest_report_from_summary_statistics(finished_run, tmp_path):
    cfg, _ = finished_run
    summary = write_csv(tmp_path / "summary.csv", reports.SUMMARY_STAT_COLUMNS,
                        [["Albumin_max", 3.630, 0.717, 6517, 3.630, 0.731, 2173]])
    rerun = replace(cfg, out_dir=str(tmp_path / "ttest"))
    rows = run_stage("ttest-report", rerun, str(summary))
    assert abs(rows[0].t) <= 0.05 and rows[0].p >= 0.98
    table = pd.read_csv(tmp_path / "ttest" / reports.COHORT_TTEST_FILE, dtype=str)
    assert table.iloc[0].tolist() == ["Albumin_max", "3.630(0.717)", "3.630(0.731)", "0.000", "1.000"]


def test_training_ignores_held_out_values(tmp_path, rng):
    values = rng.normal(size=(80, 6))
    values[rng.random((80, 6)) < 0.1] = np.nan
    labels = np.nan_to_num(values[:, 2]) + 0.5 * np.nan_to_num(values[:, 4]) > 0
    cfg = replace(make_run_config(tmp_path, tmp_path / "a"), top_k_features=3, models=("lr",))
    _, held_out = stratified_split(make_matrix(values, labels), cfg.split_ratio, derive_seeds(cfg.seed)["split"])
    shifted = values.copy()
    rows = held_out.subject_ids - 1
    shifted[rows] = rng.normal(25.0, 4.0, size=(len(rows), 6))

    states = []
    for name, data in (("a", values), ("b", shifted)):
        (tmp_path / name).mkdir()
        states.append(train_stage(cfg, make_matrix(data, labels), tmp_path / name))
    first, second = states
    assert len(first.selected) == 3
    assert first.selected == second.selected
    assert first.ranked == second.ranked
    assert first.params.to_dict() == second.params.to_dict()
    assert np.array_equal(first.models["lr"].weights, second.models["lr"].weights)


def test_only_linear_models_leave_shap_files_empty(synth_dir, tmp_path):
    cfg = replace(make_run_config(synth_dir, tmp_path / "out"), models=("lr",), cv_folds=0)
    run_pipeline(cfg)
    assert len(pd.read_csv(tmp_path / "out" / reports.SHAP_MEAN_ABS_FILE)) == 0
    assert "shap_base_values" not in json.loads((tmp_path / "out" / reports.METRICS_FILE).read_text())


def test_missing_event_table_fails_in_ingest(synth_dir, tmp_path):
    data = tmp_path / "data"
    shutil.copytree(synth_dir, data)
    (data / "LABEVENTS.csv").unlink()
    cfg = make_run_config(data, tmp_path / "out")
    with pytest.raises(StageError) as info:
        run_pipeline(cfg)
    assert info.value.stage == "ingest"
    assert info.value.exit_code == EXIT_DATA
    assert not (tmp_path / "out").exists() or not any((tmp_path / "out").iterdir())
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".out.staging-")] == []


def test_unknown_stage(run_config):
    with pytest.raises(ParameterError):
        run_stage("deploy", run_config)


def test_stage_wraps_failures():
    with pytest.raises(StageError) as info:
        with stage("train"):
            raise ValueError("boom")
    assert info.value.stage == "train" and info.value.exit_code == EXIT_PIPELINE
    with pytest.raises(StageError) as info:
        with stage("ingest"):
            raise FileNotFoundError("gone")
    assert info.value.exit_code == EXIT_DATA


def test_seeds_are_distinct_and_stable():
    seeds = derive_seeds(5)
    assert set(seeds) == set(SEED_PURPOSES)
    assert len(set(seeds.values())) == len(seeds)
    assert derive_seeds(5) == seeds != derive_seeds(6)
