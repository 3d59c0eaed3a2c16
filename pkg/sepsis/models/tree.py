"""
Decision Tree Module
CART trees stored as flat node arrays: Gini splits for classification, squared error for boosting
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from ..config import ForestConfig
from ..errors import InputError, IntegrityError, ParameterError

GINI = "gini"
SQUARED_ERROR = "squared_error"
NO_CHILD = -1
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class LeafNode:
    value: float
    cover: float
    n_neg: int
    n_pos: int


@dataclass(frozen=True)
class SplitNode:
    feature: int
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    cover: float
    impurity_decrease: float


TreeNode = Union[LeafNode, SplitNode]

_ARRAYS = ("feature", "threshold", "left", "right", "cover", "impurity_decrease", "value", "n_neg", "n_pos")


@dataclass(frozen=True, eq=False)
class Tree:
    """
    Pre-order node arrays; node 0 is the root

    Leaves have feature == -1. Rows with x[feature] <= threshold go left. `cover` counts
    training rows (with bootstrap multiplicity) reaching the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    cover: np.ndarray
    impurity_decrease: np.ndarray
    value: np.ndarray
    n_neg: np.ndarray
    n_pos: np.ndarray
    n_features: int

    def __eq__(self, other):
        if not isinstance(other, Tree) or other.n_features != self.n_features:
            return False
        return all(np.array_equal(getattr(self, a), getattr(other, a)) for a in _ARRAYS)

    __hash__ = None

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    @property
    def base_value(self) -> float:
        """Cover-weighted mean leaf value, the expectation over the training rows"""
        leaves = self.is_leaf
        return float(np.sum(self.cover[leaves] * self.value[leaves]) / self.cover[0])

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row"""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.full(len(X), self.feature[0] >= 0)
        while active.any():
            rows = np.flatnonzero(active)
            current = node[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            node[rows] = np.where(go_left, self.left[current], self.right[current])
            active[rows] = self.feature[node[rows]] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def check(self):
        """Raise IntegrityError unless covers are positive and add up at every split"""
        if self.n_nodes == 0:
            raise IntegrityError("tree has no nodes")
        if np.any(self.cover <= 0):
            raise IntegrityError("tree has a node with zero cover")
        internal = np.flatnonzero(self.feature >= 0)
        if np.any(self.feature[internal] >= self.n_features):
            raise IntegrityError("tree references a feature beyond its feature count")
        sums = self.cover[self.left[internal]] + self.cover[self.right[internal]]
        if not np.allclose(sums, self.cover[internal], rtol=0, atol=1e-9):
            raise IntegrityError("child covers do not add up to the parent cover")

    def to_root(self) -> TreeNode:
        def build(i: int) -> TreeNode:
            if self.feature[i] < 0:
                return LeafNode(float(self.value[i]), float(self.cover[i]), int(self.n_neg[i]), int(self.n_pos[i]))
            return SplitNode(int(self.feature[i]), float(self.threshold[i]), build(int(self.left[i])),
                             build(int(self.right[i])), float(self.cover[i]), float(self.impurity_decrease[i]))
        return build(0)

    @classmethod
    def from_root(cls, root: TreeNode, n_features: int) -> "Tree":
        builder = _Builder()
        stack = [(root, None, False)]
        while stack:
            node, parent, is_right = stack.pop()
            if isinstance(node, LeafNode):
                i = builder.leaf(node.value, node.cover, node.n_neg, node.n_pos)
            else:
                i = builder.split(node.feature, node.threshold, node.cover, node.impurity_decrease)
                stack.append((node.right, i, True))
                stack.append((node.left, i, False))
            if parent is not None:
                builder.link(parent, i, is_right)
        return builder.finish(n_features)


class _Builder:
    """Growable node arrays"""

    def __init__(self):
        self.columns = {name: [] for name in _ARRAYS}

    def _append(self, **values) -> int:
        for name in _ARRAYS:
            self.columns[name].append(values[name])
        return len(self.columns["feature"]) - 1

    def leaf(self, value, cover, n_neg, n_pos) -> int:
        return self._append(feature=-1, threshold=0.0, left=NO_CHILD, right=NO_CHILD, cover=cover,
                            impurity_decrease=0.0, value=value, n_neg=n_neg, n_pos=n_pos)

    def split(self, feature, threshold, cover, impurity_decrease) -> int:
        return self._append(feature=feature, threshold=threshold, left=NO_CHILD, right=NO_CHILD, cover=cover,
                            impurity_decrease=impurity_decrease, value=0.0, n_neg=0, n_pos=0)

    def link(self, parent: int, child: int, is_right: bool):
        self.columns["right" if is_right else "left"][parent] = child

    def finish(self, n_features: int) -> Tree:
        c = self.columns
        return Tree(
            feature=np.asarray(c["feature"], dtype=np.int64),
            threshold=np.asarray(c["threshold"], dtype=float),
            left=np.asarray(c["left"], dtype=np.int64),
            right=np.asarray(c["right"], dtype=np.int64),
            cover=np.asarray(c["cover"], dtype=float),
            impurity_decrease=np.asarray(c["impurity_decrease"], dtype=float),
            value=np.asarray(c["value"], dtype=float),
            n_neg=np.asarray(c["n_neg"], dtype=np.int64),
            n_pos=np.asarray(c["n_pos"], dtype=np.int64),
            n_features=int(n_features),
        )


def best_split(Xn: np.ndarray, target: np.ndarray, features: np.ndarray, criterion: str, min_leaf: int):
    """
    Exhaustive search over midpoints of adjacent distinct values

    Args:
        Xn: Node rows restricted to `features` (columns in ascending feature order)
        target: 0/1 labels for GINI, residuals for SQUARED_ERROR
        features: Feature index of every column of Xn
        criterion: GINI or SQUARED_ERROR
        min_leaf: Minimum rows per child

    Returns:
        (feature, threshold, impurity decrease) or None when no valid split exists.
        Ties go to the lower feature index, then the lower threshold.
    """
    n = len(target)
    if n < 2 or Xn.shape[1] == 0:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ts = target[order]
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    total = float(target.sum())
    s_left = np.cumsum(ts, axis=0)[:-1]
    s_right = total - s_left

    if criterion == GINI:
        p_left, p_right = s_left / n_left, s_right / n_right
        child = (n_left * 2.0 * p_left * (1.0 - p_left) + n_right * 2.0 * p_right * (1.0 - p_right)) / n
        p = total / n
        parent = 2.0 * p * (1.0 - p)
    else:
        q_left = np.cumsum(ts * ts, axis=0)[:-1]
        q_total = float(np.dot(target, target))
        sse = (q_left - s_left ** 2 / n_left) + ((q_total - q_left) - s_right ** 2 / n_right)
        child = sse / n
        parent = (q_total - total ** 2 / n) / n

    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    gain = np.where(valid, parent - child, -np.inf)
    hits = gain >= gain.max() - TIE_TOLERANCE
    col = int(np.flatnonzero(hits.any(axis=0))[0])
    row = int(np.flatnonzero(hits[:, col])[0])
    lo, hi = xs[row, col], xs[row + 1, col]
    threshold = lo + (hi - lo) / 2.0
    if not lo <= threshold < hi:
        threshold = lo
    return int(features[col]), float(threshold), max(float(gain[row, col]), 0.0)


def grow_tree(X: np.ndarray, y: np.ndarray, target: np.ndarray, criterion: str, max_depth: Optional[int],
              min_leaf: int, mtry: Optional[int], rng: Optional[np.random.Generator],
              leaf_value: Callable[[np.ndarray], float]) -> Tree:
    """
    Depth-first CART growth with an explicit stack

    Args:
        X: Training rows (duplicates from a bootstrap count in covers)
        y: Boolean labels, recorded as per-leaf class counts
        target: Split target (labels or residuals)
        criterion: GINI or SQUARED_ERROR
        max_depth: None for unlimited
        min_leaf: Minimum rows per leaf
        mtry: Features sampled per node; None or >= p evaluates all of them
        rng: Needed when mtry < p
        leaf_value: Row indices of a leaf -> stored leaf value
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    y = np.asarray(y, dtype=bool)
    target = np.asarray(target, dtype=float)
    subsample = mtry is not None and mtry < p
    builder = _Builder()
    stack = [(np.arange(n), 0, None, False)]

    while stack:
        idx, depth, parent, is_right = stack.pop()
        n_pos = int(y[idx].sum())
        n_neg = len(idx) - n_pos
        node_target = target[idx]
        split = None
        stop = (
            len(idx) < 2 * min_leaf
            or (max_depth is not None and depth >= max_depth)
            or np.all(node_target == node_target[0])
        )
        if not stop:
            if subsample:
                # no valid split among the sampled features makes a leaf
                features = np.sort(rng.permutation(p)[:mtry])
                split = best_split(X[np.ix_(idx, features)], node_target, features, criterion, min_leaf)
            else:
                features = np.arange(p)
                split = best_split(X[idx], node_target, features, criterion, min_leaf)

        if split is None:
            i = builder.leaf(leaf_value(idx), float(len(idx)), n_neg, n_pos)
        else:
            feature, threshold, decrease = split
            i = builder.split(feature, threshold, float(len(idx)), decrease)
            go_left = X[idx, feature] <= threshold
            stack.append((idx[~go_left], depth + 1, i, True))
            stack.append((idx[go_left], depth + 1, i, False))
        if parent is not None:
            builder.link(parent, i, is_right)
    return builder.finish(p)


def train_tree(X: np.ndarray, y: np.ndarray, cfg: ForestConfig = ForestConfig(),
               feature_subsample: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> Tree:
    """
    Classification tree with Gini splits; leaves store the positive frequency

    No valid split at the root gives a single-leaf tree.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=bool)
    if X.ndim != 2 or len(X) == 0:
        raise InputError("train_tree needs a non-empty 2-D matrix")
    if len(y) != len(X):
        raise InputError(f"{len(y)} labels for {len(X)} rows")
    cfg.validate()
    if feature_subsample is not None and feature_subsample < X.shape[1] and rng is None:
        raise ParameterError("feature subsampling needs a random generator")
    return grow_tree(X, y, y.astype(float), GINI, cfg.max_depth, cfg.min_leaf, feature_subsample, rng,
                     leaf_value=lambda idx: float(y[idx].mean()))
