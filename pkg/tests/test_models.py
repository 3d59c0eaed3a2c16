from __future__ import annotations

import numpy as np
import pytest
from scipy.special import expit

from conftest import fast_train_config, make_run_config
from sepsis.config import BoostConfig, ForestConfig, KnnConfig, LinearConfig, TrainConfig
from sepsis.errors import InputError, IntegrityError, ParameterError
from sepsis.features import fit_preprocess
from sepsis.models import (
    LeafNode,
    SplitNode,
    Tree,
    forest_importance,
    load_model,
    logistic_objective,
    predict_scores,
    save_model,
    train_forest,
    train_gboost,
    train_knn,
    train_logistic,
    train_model,
    train_svm,
    train_tree,
)
from sepsis.models.serialization import tree_from_nested, tree_to_nested
from sepsis.pipeline import run_stage


def _separable(rng, n=80, p=4):
    X = rng.normal(size=(n, p))
    y = X[:, 0] + 0.5 * X[:, 1] > 0
    return X, y


def test_single_threshold_split():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    tree = train_tree(X, np.array([0, 0, 1, 1], dtype=bool))
    assert tree.n_nodes == 3
    assert tree.feature[0] == 0 and tree.threshold[0] == 2.5
    assert tree.predict(np.array([[2.5], [2.6]])).tolist() == [0.0, 1.0]


def test_xor_is_learned_with_unlimited_depth():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=bool)
    tree = train_tree(X, y)
    assert tree.predict(X).tolist() == y.astype(float).tolist()
    assert tree.depth == 2


def test_pure_node_is_a_leaf():
    tree = train_tree(np.arange(6.0).reshape(3, 2), np.ones(3, dtype=bool))
    assert tree.n_nodes == 1 and tree.value[0] == 1.0


def test_constant_features_give_single_leaf():
    tree = train_tree(np.ones((4, 2)), np.array([1, 0, 1, 0], dtype=bool))
    assert tree.n_nodes == 1 and tree.value[0] == 0.5 and tree.cover[0] == 4.0


def test_sampled_features_without_a_split_make_a_leaf():
    X = np.column_stack([np.ones(8), np.arange(8.0)])
    y = np.arange(8) >= 4
    for seed in range(20):
        tree = train_tree(X, y, ForestConfig(), feature_subsample=1, rng=np.random.default_rng(seed))
        sampled = np.random.default_rng(seed).permutation(2)[0]
        if sampled == 0:
            assert tree.n_nodes == 1 and tree.value[0] == 0.5, seed
        else:
            assert tree.feature[0] == 1 and tree.threshold[0] == 3.5, seed


def test_depth_one_cannot_learn_xor():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=bool)
    scores = train_tree(X, y, ForestConfig(max_depth=1)).predict(X)
    assert ((scores >= 0.5) == y).mean() == 0.5


def test_max_depth_and_min_leaf(rng):
    X, y = _separable(rng)
    shallow = train_tree(X, ~y | (rng.random(80) < 0.3), ForestConfig(max_depth=2, min_leaf=5))
    assert shallow.depth <= 2
    assert shallow.cover[shallow.is_leaf].min() >= 5


def test_tree_covers_add_up(rng):
    X, y = _separable(rng)
    tree = train_tree(X, y)
    tree.check()
    assert tree.cover[0] == len(X)
    assert tree.base_value == pytest.approx(y.mean())


def test_nested_round_trip_and_zero_cover(rng):
    X, y = _separable(rng)
    tree = train_tree(X, y, ForestConfig(max_depth=3))
    assert tree_from_nested(tree_to_nested(tree), tree.n_features) == tree
    assert Tree.from_root(tree.to_root(), tree.n_features) == tree
    with pytest.raises(IntegrityError):
        tree_from_nested(["split", 0, 0.5, 2.0, 0.1, ["leaf", 0.0, 2.0, 2, 0], ["leaf", 1.0, 0.0, 0, 0]], 1)


def test_from_root_layout_is_pre_order():
    root = SplitNode(0, 1.0, LeafNode(0.0, 1.0, 1, 0), SplitNode(1, 2.0, LeafNode(0.5, 2.0, 1, 1),
                                                                LeafNode(1.0, 1.0, 0, 1), 3.0, 0.1), 4.0, 0.2)
    tree = Tree.from_root(root, 2)
    assert tree.feature.tolist() == [0, -1, 1, -1, -1]
    assert tree.left.tolist()[0] == 1 and tree.right.tolist()[0] == 2


def test_forest_is_independent_of_job_count(rng):
    X, y = _separable(rng)
    cfg = TrainConfig(forest=ForestConfig(n_trees=6), seed=3)
    serial = train_forest(X, y, cfg)
    parallel = train_forest(X, y, TrainConfig(forest=ForestConfig(n_trees=6), seed=3, n_jobs=2))
    assert all(a == b for a, b in zip(serial.trees, parallel.trees))
    assert np.array_equal(serial.predict_scores(X), parallel.predict_scores(X))


def test_forest_importance_ranks_the_signal(rng):
    X, y = _separable(rng, n=200)
    model = train_forest(X, y, TrainConfig(forest=ForestConfig(n_trees=30), seed=1))
    importance = forest_importance(model)
    assert importance.sum() == pytest.approx(1.0)
    assert int(np.argmax(importance)) == 0


def test_forest_without_splits_has_zero_importance():
    X = np.ones((6, 2))
    model = train_forest(X, np.array([1, 0] * 3, dtype=bool), TrainConfig(forest=ForestConfig(n_trees=3)))
    assert forest_importance(model).tolist() == [0.0, 0.0]


def test_single_tree_forest_without_bootstrap_is_a_tree(rng):
    X, y = _separable(rng)
    forest_cfg = ForestConfig(n_trees=1, bootstrap=False, mtry=100)
    model = train_forest(X, y, TrainConfig(forest=forest_cfg, seed=7))
    assert model.trees[0] == train_tree(X, y, forest_cfg)


def test_duplicated_feature_shares_the_original_importance(rng):
    # exact only without per-node feature sampling; mtry < p can route splits to the copy
    X, y = _separable(rng, n=120)
    cfg = TrainConfig(forest=ForestConfig(n_trees=10, mtry=100), seed=4)
    base = forest_importance(train_forest(X, y, cfg))
    dup = forest_importance(train_forest(np.column_stack([X, X[:, 0]]), y, cfg))
    assert dup[0] + dup[-1] == pytest.approx(base[0], abs=1e-9)
    assert dup[:-1] == pytest.approx(base, abs=1e-9)


def test_forest_needs_both_classes():
    with pytest.raises(InputError):
        train_forest(np.zeros((4, 1)), np.ones(4, dtype=bool))


def test_boosting_training_loss_does_not_increase(rng):
    X, y = _separable(rng, n=120)
    model = train_gboost(X, y, TrainConfig(boosting=BoostConfig(rounds=30)))
    history = np.asarray(model.loss_history)
    assert len(history) == 31
    assert np.all(np.diff(history) <= 1e-12)


def test_boosting_loss_on_generated_cohort(synth_dir, tmp_path):
    cfg = make_run_config(synth_dir, tmp_path)
    run_stage("cohort", cfg)
    matrix = run_stage("features", cfg)
    train, _, _ = fit_preprocess(matrix, matrix)
    model = train_gboost(train.values, train.labels, TrainConfig(boosting=BoostConfig(rounds=200)))
    history = np.asarray(model.loss_history)
    assert len(history) == 201
    assert np.all(np.diff(history) <= 1e-12)


def test_zero_rounds_predicts_the_base_rate():
    y = np.array([1, 0, 0, 0], dtype=bool)
    model = train_gboost(np.arange(4.0).reshape(-1, 1), y, TrainConfig(boosting=BoostConfig(rounds=0)))
    assert np.allclose(model.predict_scores(np.zeros((3, 1))), 0.25)


def test_boosting_margin_matches_trees(rng):
    X, y = _separable(rng)
    model = train_gboost(X, y, TrainConfig(boosting=BoostConfig(rounds=5, learning_rate=0.3)))
    margin = model.init + 0.3 * sum(t.predict(X) for t in model.trees)
    assert np.allclose(model.predict_scores(X), expit(margin))


def test_logistic_gradient_matches_finite_differences(rng):
    X, y = _separable(rng, n=30, p=3)
    w, b, eps = rng.normal(size=3), 0.3, 1e-6
    _, grad_w, grad_b = logistic_objective(w, b, X, y.astype(float), 0.1)
    for j in range(3):
        step = np.zeros(3)
        step[j] = eps
        hi = logistic_objective(w + step, b, X, y.astype(float), 0.1)[0]
        lo = logistic_objective(w - step, b, X, y.astype(float), 0.1)[0]
        assert grad_w[j] == pytest.approx((hi - lo) / (2 * eps), abs=1e-6)
    hi = logistic_objective(w, b + eps, X, y.astype(float), 0.1)[0]
    lo = logistic_objective(w, b - eps, X, y.astype(float), 0.1)[0]
    assert grad_b == pytest.approx((hi - lo) / (2 * eps), abs=1e-6)


def test_logistic_gradient_at_random_points(rng):
    X, y = _separable(rng, n=50, p=4)
    target, h = y.astype(float), 1e-5
    for _ in range(20):
        w, b = rng.normal(size=4), float(rng.normal())
        _, grad_w, grad_b = logistic_objective(w, b, X, target, 0.1)
        analytic = np.append(grad_w, grad_b)
        numeric = np.empty(5)
        for j in range(5):
            step = np.zeros(5)
            step[j] = h
            hi = logistic_objective(w + step[:4], b + step[4], X, target, 0.1)[0]
            lo = logistic_objective(w - step[:4], b - step[4], X, target, 0.1)[0]
            numeric[j] = (hi - lo) / (2 * h)
        error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), np.linalg.norm(numeric))
        assert error <= 1e-5


def test_logistic_objective_never_increases(rng):
    X, y = _separable(rng)
    model = train_logistic(X, y, TrainConfig(logistic=LinearConfig(epochs=100, step=5.0)))
    assert np.all(np.diff(model.history) <= 0.0)
    assert ((model.predict_scores(X) > 0.5) == y).mean() >= 0.9


def test_svm_separates_clear_classes():
    X = np.array([[-3.0, 0.0], [-2.5, 1.0], [-3.5, -1.0], [3.0, 0.0], [2.5, -1.0], [3.5, 1.0]])
    y = np.array([0, 0, 0, 1, 1, 1], dtype=bool)
    model = train_svm(X, y, TrainConfig(svm=LinearConfig(epochs=200)))
    assert ((model.margins(X) > 0) == y).all()
    assert model.weights[0] > 0


def test_knn_scores_and_tie_break():
    X = np.array([[0.0], [1.0], [1.0], [5.0]])
    y = np.array([0, 1, 0, 1], dtype=bool)
    model = train_knn(X, y, TrainConfig(knn=KnnConfig(k=2)))
    assert model.neighbors(np.array([[1.0]])).tolist() == [[1, 2]]
    assert model.predict_scores(np.array([[0.1], [1.0]])).tolist() == [0.5, 0.5]


def test_knn_k_larger_than_training_set():
    with pytest.raises(ParameterError):
        train_knn(np.zeros((3, 1)), np.array([1, 0, 1], dtype=bool), TrainConfig(knn=KnnConfig(k=4)))


def test_knn_single_neighbor_recalls_training_labels(rng):
    X, y = _separable(rng)
    model = train_knn(X, y, TrainConfig(knn=KnnConfig(k=1)))
    assert np.array_equal(model.predict_scores(X), y.astype(float))


def test_knn_with_every_row_gives_the_positive_rate(rng):
    X, y = _separable(rng, n=40)
    model = train_knn(X, y, TrainConfig(knn=KnnConfig(k=40)))
    assert model.predict_scores(rng.normal(size=(6, 4))) == pytest.approx(np.full(6, y.mean()))


def test_knn_neighbors_match_sklearn(rng):
    neighbors = pytest.importorskip("sklearn.neighbors")
    X, y = _separable(rng)
    queries = rng.normal(size=(25, 4))
    model = train_knn(X, y, TrainConfig(knn=KnnConfig(k=5)))
    oracle = neighbors.NearestNeighbors(n_neighbors=5).fit(X)
    assert np.array_equal(model.neighbors(queries), oracle.kneighbors(queries, return_distance=False))


@pytest.mark.parametrize("kind", ["rf", "gb", "lr", "svm", "knn"])
def test_saved_model_scores_identically(kind, rng, tmp_path):
    X, y = _separable(rng)
    model = train_model(kind, X, y, fast_train_config(seed=2))
    save_model(model, tmp_path / f"{kind}.json")
    loaded = load_model(tmp_path / f"{kind}.json")
    assert loaded.kind == kind
    scores = predict_scores(model, X)
    assert np.array_equal(predict_scores(loaded, X), scores)
    assert ((scores >= 0.0) & (scores <= 1.0)).all()


def test_unknown_kind_and_wrong_width(rng):
    X, y = _separable(rng)
    with pytest.raises(ParameterError):
        train_model("xgb", X, y)
    model = train_model("lr", X, y, fast_train_config())
    with pytest.raises(InputError):
        predict_scores(model, X[:, :2])
