"""
Seeded statistical checks; slow, deselect with -m "not slow" (the nightly ones with -m "not nightly")
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import make_run_config
from sepsis.config import ForestConfig, TrainConfig
from sepsis.data import SynthConfig, generate_dataset
from sepsis.models import forest_importance, train_forest
from sepsis.pipeline import load_training, run_pipeline

pytestmark = pytest.mark.slow


def test_single_informative_feature_ranks_first():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(200, 5))
        y = X[:, 2] + 0.5 * rng.normal(size=200) > 0
        model = train_forest(X, y, TrainConfig(forest=ForestConfig(n_trees=20), seed=seed))
        importance = forest_importance(model)
        assert abs(importance.sum() - 1.0) <= 1e-12
        assert int(np.argmax(importance)) == 2, seed


def test_zero_signal_gives_chance_level(tmp_path):
    covered = 0
    repeats = 10
    for seed in range(repeats):
        data = tmp_path / f"null{seed}"
        generate_dataset(SynthConfig(n_patients=2000, signal_strength=0.0, n_informative_items=4,
                                     n_noise_items=6, seed=seed), data)
        cfg = replace(make_run_config(data, tmp_path / f"out{seed}"), seed=seed, models=("rf", "lr"),
                      cv_folds=0, bootstrap_b=200, top_k_features=10)
        report = run_pipeline(cfg)
        for ev in report.models.values():
            assert 0.35 <= ev.auroc <= 0.65
        covered += all(ev.auroc_ci[0] <= 0.5 <= ev.auroc_ci[1] for ev in report.models.values())
    assert covered >= repeats - 2


def test_default_generator_signal_is_recovered(tmp_path):
    data = tmp_path / "data"
    generate_dataset(SynthConfig(), data)
    cfg = replace(make_run_config(data, tmp_path / "out"), models=("rf", "lr"), cv_folds=0, bootstrap_b=200,
                  top_k_features=35, train=TrainConfig(forest=ForestConfig(n_trees=100)))
    rf = run_pipeline(cfg).models["rf"]
    assert rf.auroc >= 0.95
    assert rf.auroc_ci[1] - rf.auroc_ci[0] <= 0.05


def test_trees_beat_linear_on_the_nonlinear_variant(tmp_path):
    data = tmp_path / "data"
    generate_dataset(SynthConfig(n_patients=3000, n_noise_items=10, nonlinear=True), data)
    cfg = replace(make_run_config(data, tmp_path / "out"), models=("rf", "lr"), cv_folds=0, bootstrap_b=50,
                  top_k_features=20, train=TrainConfig(forest=ForestConfig(n_trees=100)))
    report = run_pipeline(cfg)
    assert report.models["rf"].auroc >= report.models["lr"].auroc


@pytest.mark.nightly
def test_zero_signal_auroc_stays_within_its_null_spread(tmp_path):
    repeats = 100
    covered = {"rf": 0, "lr": 0}
    for seed in range(repeats):
        data = tmp_path / f"null{seed}"
        generate_dataset(SynthConfig(n_patients=2000, signal_strength=0.0, n_informative_items=4,
                                     n_noise_items=6, seed=seed), data)
        cfg = replace(make_run_config(data, tmp_path / f"out{seed}"), seed=seed, models=("rf", "lr"),
                      cv_folds=0, bootstrap_b=200, top_k_features=10)
        report = run_pipeline(cfg)
        labels = load_training(cfg, cfg.out_dir, with_models=False).test.labels
        n_pos, n_neg = int(labels.sum()), int((~labels).sum())
        # Mann-Whitney spread of the AUROC under no signal
        spread = math.sqrt((n_pos + n_neg + 1) / (12.0 * n_pos * n_neg))
        for kind, ev in report.models.items():
            assert abs(ev.auroc - 0.5) <= 4.0 * spread, (seed, kind)
            covered[kind] += ev.auroc_ci[0] <= 0.5 <= ev.auroc_ci[1]
    # 95% intervals; three binomial standard deviations below the nominal count
    floor = repeats * 0.95 - 3.0 * math.sqrt(repeats * 0.95 * 0.05)
    assert all(count >= floor for count in covered.values()), covered
