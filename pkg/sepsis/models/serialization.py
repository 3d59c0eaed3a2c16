"""
Model Serialization Module
Versioned JSON documents for every model kind; trees are nested arrays
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from ..config import BoostConfig, ForestConfig, KnnConfig, LinearConfig
from ..errors import InputError, IntegrityError
from .boosting import BoostModel
from .forest import ForestModel
from .knn import KnnModel
from .linear import LinearModel
from .tree import LeafNode, SplitNode, Tree

FORMAT_VERSION = 1


def tree_to_nested(tree: Tree, i: int = 0) -> list:
    """["leaf", value, cover, n_neg, n_pos] or ["split", feature, threshold, cover, decrease, left, right]"""
    if tree.feature[i] < 0:
        return ["leaf", float(tree.value[i]), float(tree.cover[i]), int(tree.n_neg[i]), int(tree.n_pos[i])]
    return [
        "split", int(tree.feature[i]), float(tree.threshold[i]), float(tree.cover[i]),
        float(tree.impurity_decrease[i]),
        tree_to_nested(tree, int(tree.left[i])),
        tree_to_nested(tree, int(tree.right[i])),
    ]


def _node_from_nested(data: list):
    tag = data[0]
    if tag == "leaf":
        _, value, cover, n_neg, n_pos = data
        return LeafNode(float(value), float(cover), int(n_neg), int(n_pos))
    if tag == "split":
        _, feature, threshold, cover, decrease, left, right = data
        return SplitNode(int(feature), float(threshold), _node_from_nested(left), _node_from_nested(right),
                         float(cover), float(decrease))
    raise IntegrityError(f"unknown tree node tag {tag!r}")


def tree_from_nested(data: list, n_features: int) -> Tree:
    tree = Tree.from_root(_node_from_nested(data), n_features)
    tree.check()
    return tree


def model_to_dict(model) -> dict:
    doc = {"format_version": FORMAT_VERSION, "kind": model.kind, "n_features": int(model.n_features)}
    if isinstance(model, ForestModel):
        doc["config"] = asdict(model.config)
        doc["trees"] = [tree_to_nested(t) for t in model.trees]
    elif isinstance(model, BoostModel):
        doc["config"] = asdict(model.config)
        doc["init"] = model.init
        doc["learning_rate"] = model.learning_rate
        doc["loss_history"] = list(model.loss_history)
        doc["trees"] = [tree_to_nested(t) for t in model.trees]
    elif isinstance(model, LinearModel):
        doc["config"] = asdict(model.config)
        doc["weights"] = [float(w) for w in model.weights]
        doc["bias"] = float(model.bias)
        doc["history"] = list(model.history)
    elif isinstance(model, KnnModel):
        doc["config"] = asdict(model.config)
        doc["k"] = model.k
        doc["X"] = model.X.tolist()
        doc["y"] = model.y.tolist()
    else:
        raise InputError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    if doc.get("format_version") != FORMAT_VERSION:
        raise InputError(f"unsupported model format version {doc.get('format_version')}")
    kind = doc.get("kind")
    p = int(doc["n_features"])
    if kind == "rf":
        trees = tuple(tree_from_nested(t, p) for t in doc["trees"])
        return ForestModel(trees=trees, n_features=p, config=ForestConfig(**doc["config"]))
    if kind == "gb":
        trees = tuple(tree_from_nested(t, p) for t in doc["trees"])
        return BoostModel(init=float(doc["init"]), trees=trees, learning_rate=float(doc["learning_rate"]),
                          n_features=p, config=BoostConfig(**doc["config"]),
                          loss_history=tuple(doc["loss_history"]))
    if kind in ("lr", "svm"):
        return LinearModel(weights=np.asarray(doc["weights"], dtype=float), bias=float(doc["bias"]), kind=kind,
                           config=LinearConfig(**doc["config"]), history=tuple(doc["history"]))
    if kind == "knn":
        X = np.asarray(doc["X"], dtype=float).reshape(-1, p)
        return KnnModel(X=X, y=np.asarray(doc["y"], dtype=float), k=int(doc["k"]), config=KnnConfig(**doc["config"]))
    raise InputError(f"unknown model kind {kind!r}")


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f)
        f.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as f:
        return model_from_dict(json.load(f))
