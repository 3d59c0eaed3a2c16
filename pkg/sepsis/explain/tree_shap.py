"""
TreeSHAP Module
Path-dependent Shapley values for a single tree, vectorized over rows, plus an exhaustive oracle
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InputError, IntegrityError, OracleError
from ..models.tree import Tree

ORACLE_MAX_FEATURES = 20


class _Path:
    """
    Unique-feature path from the root: one (feature, zero fraction, one fraction) per element
    and the permutation weights. One fractions and weights carry a column per explained row.
    """

    __slots__ = ("features", "zeros", "ones", "weights")

    def __init__(self, features: list, zeros: np.ndarray, ones: np.ndarray, weights: np.ndarray):
        self.features = features
        self.zeros = zeros
        self.ones = ones
        self.weights = weights

    @classmethod
    def empty(cls, n_rows: int) -> "_Path":
        return cls([], np.empty(0), np.empty((0, n_rows)), np.empty((0, n_rows)))

    def extend(self, zero: float, one: np.ndarray, feature: int) -> "_Path":
        l = len(self.features)
        old = self.weights
        weights = np.zeros((l + 1, old.shape[1]))
        if l == 0:
            weights[0] = 1.0
        else:
            i = np.arange(l, dtype=float)[:, None]
            weights[:l] = zero * old * (l - i) / (l + 1)
            weights[1:] += one * old * (i + 1) / (l + 1)
        return _Path(
            self.features + [feature],
            np.append(self.zeros, zero),
            np.vstack([self.ones, one]),
            weights,
        )

    def unwind(self, k: int) -> "_Path":
        """Remove element k, undoing its contribution to the weights"""
        ud = len(self.features) - 1
        one, zero = self.ones[k], self.zeros[k]
        nonzero = one != 0
        safe_one = np.where(nonzero, one, 1.0)
        weights = self.weights.copy()
        next_one = weights[ud].copy()
        for i in range(ud - 1, -1, -1):
            kept = weights[i].copy()
            updated = np.where(
                nonzero,
                next_one * (ud + 1) / ((i + 1) * safe_one),
                weights[i] * (ud + 1) / (zero * (ud - i)),
            )
            next_one = np.where(nonzero, kept - updated * zero * (ud - i) / (ud + 1), next_one)
            weights[i] = updated
        keep = [j for j in range(ud + 1) if j != k]
        return _Path(
            [self.features[j] for j in keep],
            self.zeros[keep],
            self.ones[keep],
            weights[:ud],
        )

    def unwound_sums(self) -> np.ndarray:
        """Total permutation weight with each element 1..ud unwound, shape (ud, rows)"""
        ud = len(self.features) - 1
        ones = self.ones[1:]
        zeros = self.zeros[1:, None]
        nonzero = ones != 0
        safe_one = np.where(nonzero, ones, 1.0)
        next_one = np.broadcast_to(self.weights[ud], ones.shape).copy()
        total = np.zeros_like(ones)
        for j in range(ud - 1, -1, -1):
            scaled = next_one * (ud + 1) / ((j + 1) * safe_one)
            total += np.where(nonzero, scaled, (self.weights[j] / zeros) / ((ud - j) / (ud + 1)))
            next_one = np.where(nonzero, self.weights[j] - scaled * zeros * ((ud - j) / (ud + 1)), next_one)
        return total


def _check_tree(tree: Tree, X: np.ndarray):
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise InputError(f"tree expects {tree.n_features} features, got shape {X.shape}")
    if np.any(tree.cover <= 0):
        raise IntegrityError("tree has a node with zero cover; path weights are undefined")


def expected_value(tree: Tree) -> float:
    """v(empty set): leaf values weighted by the product of child / parent cover ratios"""
    reach = np.zeros(tree.n_nodes)
    reach[0] = 1.0
    for i in range(tree.n_nodes):
        if tree.feature[i] >= 0:
            for child in (tree.left[i], tree.right[i]):
                reach[child] = reach[i] * tree.cover[child] / tree.cover[i]
    leaves = tree.is_leaf
    return float(np.sum(reach[leaves] * tree.value[leaves]))


def tree_shap_matrix(tree: Tree, X: np.ndarray) -> tuple:
    """
    Path-dependent TreeSHAP for every row of X

    Returns:
        (phi of shape (rows, features), base value); base + phi.sum(1) equals tree.predict(X)
    """
    X = np.asarray(X, dtype=float)
    _check_tree(tree, X)
    n = len(X)
    phi = np.zeros((n, tree.n_features))

    def recurse(node: int, path: _Path, zero: float, one: np.ndarray, feature: int):
        path = path.extend(zero, one, feature)
        f = int(tree.feature[node])
        if f < 0:
            if len(path.features) > 1:
                contrib = path.unwound_sums() * (path.ones[1:] - path.zeros[1:, None]) * tree.value[node]
                phi[:, path.features[1:]] += contrib.T
            return
        incoming_zero, incoming_one = 1.0, np.ones(n)
        if f in path.features:
            k = path.features.index(f)
            incoming_zero, incoming_one = path.zeros[k], path.ones[k]
            path = path.unwind(k)
        go_left = X[:, f] <= tree.threshold[node]
        for child, reached in ((int(tree.left[node]), go_left), (int(tree.right[node]), ~go_left)):
            recurse(child, path, incoming_zero * tree.cover[child] / tree.cover[node],
                    incoming_one * reached, f)

    recurse(0, _Path.empty(n), 1.0, np.ones(n), -1)
    return phi, expected_value(tree)


def tree_shap(tree: Tree, x: np.ndarray) -> tuple:
    """(phi vector, base value) for a single feature vector"""
    phi, base = tree_shap_matrix(tree, np.asarray(x, dtype=float).reshape(1, -1))
    return phi[0], base


def conditional_expectation(tree: Tree, x: np.ndarray, in_set: np.ndarray) -> float:
    """v(S): features in S follow x, the others split by child cover ratios"""
    def go(i: int) -> float:
        f = tree.feature[i]
        if f < 0:
            return float(tree.value[i])
        left, right = int(tree.left[i]), int(tree.right[i])
        if in_set[f]:
            return go(left if x[f] <= tree.threshold[i] else right)
        return (tree.cover[left] * go(left) + tree.cover[right] * go(right)) / tree.cover[i]
    return go(0)


def exact_shapley_oracle(tree: Tree, x: np.ndarray) -> np.ndarray:
    """Shapley values by enumerating all 2^p coalitions; refuses p > 20"""
    x = np.asarray(x, dtype=float)
    _check_tree(tree, x.reshape(1, -1))
    p = tree.n_features
    if p > ORACLE_MAX_FEATURES:
        raise OracleError(f"exhaustive Shapley oracle is limited to {ORACLE_MAX_FEATURES} features, got {p}")
    masks = np.arange(2 ** p)
    bits = (masks[:, None] >> np.arange(p)) & 1
    v = np.array([conditional_expectation(tree, x, bits[m].astype(bool)) for m in masks])
    sizes = bits.sum(axis=1)
    weight = np.array([math.factorial(s) * math.factorial(p - s - 1) / math.factorial(p) for s in range(p)])
    phi = np.zeros(p)
    for j in range(p):
        without = masks[bits[:, j] == 0]
        phi[j] = np.sum(weight[sizes[without]] * (v[without | (1 << j)] - v[without]))
    return phi
