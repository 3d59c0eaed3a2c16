from __future__ import annotations

import csv
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from sepsis.config import BoostConfig, ForestConfig, KnnConfig, LinearConfig, RunConfig, TrainConfig
from sepsis.data import SynthConfig, generate_dataset
from sepsis.features import FeatureMatrix


def write_csv(path: Path, header: list, rows: list) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


@pytest.fixture
def mimic_dir(tmp_path) -> Path:
    """
    Five hand-built tables

    Subjects: 1 sepsis on latest admission, dies; 2 sepsis (dotted code), survives, two
    admissions; 3 sepsis only on the earlier admission; 4 is 17 years old with sepsis;
    5 has no diagnoses at all.
    """
    d = tmp_path / "mimic"
    d.mkdir()
    write_csv(d / "PATIENTS.csv", ["SUBJECT_ID", "GENDER", "DOB", "DOD"], [
        [1, "M", "1950-01-01 00:00:00", "2020-02-01 00:00:00"],
        [2, "F", "1960-01-01", ""],
        [3, "F", "1970-01-01 00:00:00", ""],
        [4, "M", "2002-06-01 00:00:00", ""],
        [5, "M", "1940-01-01 00:00:00", ""],
    ])
    write_csv(d / "ADMISSIONS.csv", ["SUBJECT_ID", "HADM_ID", "ADMITTIME", "ETHNICITY", "HOSPITAL_EXPIRE_FLAG"], [
        [1, 11, "2020-01-01 08:00:00", "WHITE", 1],
        [2, 21, "2015-01-01 08:00:00", "ASIAN", 1],
        [2, 22, "2019-01-01 08:00:00", "ASIAN", 0],
        [3, 31, "2010-01-01 08:00:00", "WHITE", 0],
        [3, 32, "2012-01-01 08:00:00", "WHITE", 0],
        [4, 41, "2020-01-01 08:00:00", "BLACK", 0],
        [5, 51, "2020-01-01 08:00:00", "WHITE", 1],
    ])
    write_csv(d / "DIAGNOSES_ICD.csv", ["SUBJECT_ID", "HADM_ID", "ICD9_CODE"], [
        [1, 11, "99591"],
        [1, 11, "4019"],
        [2, 22, "995.92"],
        [3, 31, "78552"],
        [3, 32, "4280"],
        [4, 41, "99592"],
    ])
    events = ["SUBJECT_ID", "HADM_ID", "ITEMID", "CHARTTIME", "VALUENUM"]
    write_csv(d / "CHARTEVENTS.csv", events, [
        [1, 11, 100, "2020-01-01 09:00:00", "1"],
        [1, 11, 100, "2020-01-01 10:00:00", "3"],
        [2, 22, 100, "2019-01-01 09:00:00", "5"],
        [3, 32, 100, "2012-01-01 09:00:00", "7"],
        [2, 22, 100, "2019-01-01 10:00:00", ""],
        [2, 22, 100, "2019-01-01 11:00:00", "see note"],
    ])
    write_csv(d / "LABEVENTS.csv", events, [
        [1, 11, 200, "2020-01-01 09:00:00", "1"],
        [1, 11, 200, "2020-01-01 09:30:00", "2"],
        [1, 11, 200, "2020-01-01 10:00:00", "10"],
        [2, 22, 200, "2019-01-01 09:00:00", "4"],
    ])
    write_csv(d / "item_names.csv", ["ITEMID", "LABEL"], [[100, "Heart Rate"], [200, "Lactate"]])
    return d


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory) -> Path:
    """A small generated dataset shared by the pipeline tests"""
    out = tmp_path_factory.mktemp("synth")
    generate_dataset(SynthConfig(n_patients=400, n_informative_items=4, n_noise_items=4, seed=11,
                                 signal_strength=2.0), out)
    return out


def fast_train_config(seed: int = 0) -> TrainConfig:
    return TrainConfig(
        forest=ForestConfig(n_trees=15),
        boosting=BoostConfig(rounds=15),
        logistic=LinearConfig(epochs=60),
        svm=LinearConfig(epochs=60),
        knn=KnnConfig(k=5),
        seed=seed,
    )


def make_run_config(data_dir: Path, out_dir: Path) -> RunConfig:
    return RunConfig(
        data_dir=str(data_dir),
        out_dir=str(out_dir),
        seed=5,
        top_k_features=12,
        cv_folds=2,
        bootstrap_b=40,
        shap_max_rows=15,
        n_jobs=1,
        progress=False,
        train=fast_train_config(),
    )


@pytest.fixture
def run_config(synth_dir, tmp_path) -> RunConfig:
    return make_run_config(synth_dir, tmp_path / "out")


def make_matrix(values, labels, columns=None, categoricals=None, subject_ids=None) -> FeatureMatrix:
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    return FeatureMatrix(
        subject_ids=np.arange(1, n + 1) if subject_ids is None else subject_ids,
        columns=columns or [f"f{j}" for j in range(p)],
        values=values,
        labels=labels,
        categoricals=categoricals or {},
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def with_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    return replace(cfg, seed=seed)
