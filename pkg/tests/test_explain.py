from __future__ import annotations

import numpy as np
import pytest

from sepsis.config import BoostConfig, ForestConfig, TrainConfig
from sepsis.errors import ExplanationError, InputError, IntegrityError, OracleError
from sepsis.explain import (
    ShapMatrix,
    ensemble_shap,
    exact_shapley_oracle,
    expected_value,
    shap_report,
    tree_shap,
    tree_shap_matrix,
)
from sepsis.models import ForestModel, LeafNode, SplitNode, Tree, train_forest, train_gboost, train_logistic


def random_tree(rng: np.random.Generator, n_features: int, max_depth: int) -> Tree:
    """Random structure with positive covers that add up; features repeat along paths"""
    def grow(depth: int):
        if depth >= max_depth or (depth > 0 and rng.random() < 0.3):
            return LeafNode(float(rng.normal()), float(rng.integers(1, 20)), 0, 0)
        left, right = grow(depth + 1), grow(depth + 1)
        return SplitNode(int(rng.integers(0, n_features)), float(rng.normal()), left, right,
                         left.cover + right.cover, 0.0)
    return Tree.from_root(grow(0), n_features)


def _leaf(value, cover):
    return LeafNode(value, cover, 0, 0)


def test_agrees_with_exhaustive_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(120):
        p = int(rng.integers(1, 6))
        tree = random_tree(rng, p, int(rng.integers(1, 6)))
        x = rng.normal(size=p)
        phi, base = tree_shap(tree, x)
        assert np.allclose(phi, exact_shapley_oracle(tree, x), atol=1e-9)
        assert base + phi.sum() == pytest.approx(tree.predict(x.reshape(1, -1))[0], abs=1e-9)


def test_matrix_rows_match_single_rows():
    rng = np.random.default_rng(5)
    tree = random_tree(rng, 4, 5)
    X = rng.normal(size=(25, 4))
    phi, base = tree_shap_matrix(tree, X)
    for i in range(len(X)):
        single, single_base = tree_shap(tree, X[i])
        assert np.allclose(phi[i], single, atol=1e-12)
        assert single_base == base
    assert np.allclose(base + phi.sum(axis=1), tree.predict(X), atol=1e-9)


def test_single_leaf_tree():
    tree = Tree.from_root(_leaf(0.7, 10.0), 3)
    phi, base = tree_shap(tree, np.array([1.0, 2.0, 3.0]))
    assert phi.tolist() == [0.0, 0.0, 0.0]
    assert base == 0.7


def test_depth_one_tree():
    tree = Tree.from_root(SplitNode(0, 0.0, _leaf(1.0, 3.0), _leaf(0.0, 1.0), 4.0, 0.0), 2)
    phi, base = tree_shap(tree, np.array([-1.0, 5.0]))
    assert base == pytest.approx(0.75)
    assert phi[0] == pytest.approx(0.25)
    assert phi[1] == 0.0


def test_unused_feature_gets_nothing():
    rng = np.random.default_rng(8)
    for _ in range(20):
        tree = random_tree(rng, 3, 4)
        wide = Tree(tree.feature, tree.threshold, tree.left, tree.right, tree.cover, tree.impurity_decrease,
                    tree.value, tree.n_neg, tree.n_pos, n_features=5)
        phi, _ = tree_shap(wide, rng.normal(size=5))
        assert phi[3] == 0.0 and phi[4] == 0.0


def test_repeated_feature_on_path():
    leaves = [_leaf(v, c) for v, c in ((0.0, 2.0), (1.0, 3.0), (4.0, 5.0))]
    inner = SplitNode(0, 1.0, leaves[0], leaves[1], 5.0, 0.0)
    tree = Tree.from_root(SplitNode(0, 2.0, inner, leaves[2], 10.0, 0.0), 1)
    for x in (0.5, 1.5, 3.0):
        phi, base = tree_shap(tree, np.array([x]))
        assert base + phi[0] == pytest.approx(tree.predict(np.array([[x]]))[0])


def test_expected_value_weights_leaves_by_cover():
    tree = Tree.from_root(SplitNode(0, 0.0, _leaf(2.0, 1.0), _leaf(6.0, 3.0), 4.0, 0.0), 1)
    assert expected_value(tree) == 5.0 == tree.base_value


def test_zero_cover_is_rejected():
    tree = Tree.from_root(SplitNode(0, 0.0, _leaf(1.0, 0.0), _leaf(0.0, 2.0), 2.0, 0.0), 1)
    with pytest.raises(IntegrityError):
        tree_shap(tree, np.array([0.0]))


def test_width_mismatch():
    tree = Tree.from_root(_leaf(1.0, 1.0), 2)
    with pytest.raises(InputError):
        tree_shap_matrix(tree, np.zeros((3, 4)))


def test_oracle_refuses_wide_inputs():
    tree = Tree.from_root(_leaf(1.0, 1.0), 21)
    with pytest.raises(OracleError):
        exact_shapley_oracle(tree, np.zeros(21))


def _data(rng, n=120, p=5):
    X = rng.normal(size=(n, p))
    y = X[:, 0] - X[:, 2] + 0.3 * rng.normal(size=n) > 0
    return X, y


def test_forest_attributions_reconstruct_probabilities(rng):
    X, y = _data(rng)
    model = train_forest(X, y, TrainConfig(forest=ForestConfig(n_trees=10, max_depth=5), seed=2))
    shap = ensemble_shap(model, X[:30])
    assert shap.scale == "probability"
    assert np.abs(shap.reconstructed() - model.predict_scores(X[:30])).max() <= 1e-6


def test_boosting_attributions_reconstruct_margins(rng):
    X, y = _data(rng)
    model = train_gboost(X, y, TrainConfig(boosting=BoostConfig(rounds=12)))
    shap = ensemble_shap(model, X[:30])
    assert shap.scale == "margin"
    assert np.abs(shap.reconstructed() - model.margin(X[:30])).max() <= 1e-6


def test_parallel_trees_give_the_same_matrix(rng):
    X, y = _data(rng)
    model = train_forest(X, y, TrainConfig(forest=ForestConfig(n_trees=4, max_depth=4), seed=1))
    assert np.array_equal(ensemble_shap(model, X[:10]).values, ensemble_shap(model, X[:10], n_jobs=2).values)


def test_duplicated_tree_changes_nothing():
    rng = np.random.default_rng(3)
    tree = random_tree(rng, 3, 4)
    X = rng.normal(size=(8, 3))
    once = ensemble_shap(ForestModel(trees=(tree,), n_features=3), X)
    twice = ensemble_shap(ForestModel(trees=(tree, tree), n_features=3), X)
    assert np.allclose(once.values, twice.values, atol=1e-12)
    assert once.base_value == pytest.approx(twice.base_value)


def test_linear_model_has_no_tree_attributions(rng):
    X, y = _data(rng)
    with pytest.raises(ExplanationError):
        ensemble_shap(train_logistic(X, y), X)


def test_report_ranking_and_records():
    values = np.array([[0.5, -0.1, 0.0], [-0.5, 0.1, 0.2], [0.2, 0.1, -0.2]])
    X = np.array([[1.0, 2.0, 3.0], [3.0, 2.0, 1.0], [2.0, 2.0, 2.0]])
    shap = ShapMatrix(values, 0.1, columns=("c", "b", "a"), row_ids=(11, 12, 13))
    table, records = shap_report(shap, X, top_n=2)
    assert [(row.feature, row.rank) for row in table] == [("c", 1), ("a", 2), ("b", 3)]
    assert table[0].mean_abs == pytest.approx(0.4)
    assert len(records) == 3 * 2
    first = [r for r in records if r.feature == "c"]
    assert [r.row_id for r in first] == [11, 12, 13]
    assert [r.feature_value for r in first] == pytest.approx([-1.224744871, 1.224744871, 0.0])
    assert {r.feature for r in records} == {"c", "a"}


def test_report_top_n_larger_than_width():
    shap = ShapMatrix(np.ones((4, 2)), 0.0)
    table, records = shap_report(shap, np.zeros((4, 2)), top_n=20)
    assert len(table) == 2 and len(records) == 8
    assert [row.feature for row in table] == ["f0", "f1"]
    assert all(r.feature_value == 0.0 for r in records)


def test_report_rejects_misaligned_rows():
    with pytest.raises(InputError):
        shap_report(ShapMatrix(np.zeros((3, 2)), 0.0), np.zeros((2, 2)))
