"""
Preprocessing Module
Sparse-column filter, stratified split and the train-fitted impute / one-hot / scale steps
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..config import MISSING_THRESHOLD, SPLIT_RATIO
from ..errors import InputError, ParameterError, PipelineError, SplitError
from .matrix import FeatureMatrix

logger = logging.getLogger(__name__)

PARAMS_FORMAT_VERSION = 1
_RATIO_TOLERANCE = 1e-12


def drop_sparse(matrix: FeatureMatrix, threshold: float = MISSING_THRESHOLD) -> FeatureMatrix:
    """Keep a column iff its missing fraction is below threshold; exactly threshold is dropped"""
    if not 0.0 < threshold <= 1.0:
        raise ParameterError(f"threshold must be in (0, 1], got {threshold}")
    n = matrix.n_rows
    if n == 0:
        raise PipelineError("no features remain: the matrix has no rows")
    missing = np.isnan(matrix.values).sum(axis=0) / n
    keep = missing < threshold - _RATIO_TOLERANCE
    columns = [c for c, k in zip(matrix.columns, keep) if k]
    categoricals = {
        name: tokens for name, tokens in matrix.categoricals.items()
        if np.mean([not str(t).strip() for t in tokens]) < threshold - _RATIO_TOLERANCE
    }
    dropped = matrix.n_features - len(columns) + len(matrix.categoricals) - len(categoricals)
    if not columns and not categoricals:
        raise PipelineError("no features remain after dropping sparse columns")
    logger.info("drop_sparse: %d of %d columns dropped at threshold %.2f",
                dropped, matrix.n_features + len(matrix.categoricals), threshold)
    return replace(matrix.take_columns(columns), categoricals=categoricals)


def stratified_split(matrix: FeatureMatrix, ratio: float = SPLIT_RATIO, seed: int = 0) -> tuple:
    """
    Stratified train/test partition

    The train side gets exactly round(ratio * n) rows, of which round(ratio * n_pos) are
    positive unless that would empty a class on one side; both partitions keep the original row order.
    """
    if not 0.0 < ratio < 1.0:
        raise ParameterError(f"ratio must be in (0, 1), got {ratio}")
    pos = np.flatnonzero(matrix.labels)
    neg = np.flatnonzero(~matrix.labels)
    if len(pos) < 2 or len(neg) < 2:
        raise SplitError(f"each class needs at least 2 rows (positives={len(pos)}, negatives={len(neg)})")

    n_train = math.floor(ratio * matrix.n_rows + 0.5)
    # train positives; both classes on both sides when the sizes allow it
    lo, hi = max(1, n_train - len(neg) + 1), min(len(pos) - 1, n_train - 1)
    if lo > hi:
        lo, hi = max(0, n_train - len(neg)), min(len(pos), n_train)
    n_pos = min(max(math.floor(ratio * len(pos) + 0.5), lo), hi)
    n_neg = n_train - n_pos

    rng = np.random.default_rng(seed)
    pos, neg = rng.permutation(pos), rng.permutation(neg)
    train_idx = np.sort(np.concatenate([pos[:n_pos], neg[:n_neg]]))
    test_idx = np.sort(np.concatenate([pos[n_pos:], neg[n_neg:]]))
    logger.info("split: %d train (%d positive) / %d test (%d positive)",
                len(train_idx), n_pos, len(test_idx), len(pos) - n_pos)
    return matrix.take_rows(train_idx), matrix.take_rows(test_idx)


@dataclass(frozen=True)
class ImputeParams:
    columns: tuple
    means: tuple
    dropped: tuple = ()


@dataclass(frozen=True)
class ScaleParams:
    columns: tuple
    means: tuple
    sds: tuple
    dropped: tuple = ()


@dataclass(frozen=True)
class PreprocessParams:
    """Everything fitted on the training rows; applying it never looks at the target rows' statistics"""

    impute: ImputeParams
    vocabulary: dict
    scale: ScaleParams
    retained: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "format_version": PARAMS_FORMAT_VERSION,
            "impute": {k: list(v) for k, v in asdict(self.impute).items()},
            "vocabulary": {k: list(v) for k, v in self.vocabulary.items()},
            "scale": {k: list(v) for k, v in asdict(self.scale).items()},
            "retained": list(self.retained),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PreprocessParams":
        if data.get("format_version") != PARAMS_FORMAT_VERSION:
            raise InputError(f"unsupported preprocess params version {data.get('format_version')}")
        return cls(
            impute=ImputeParams(**{k: tuple(v) for k, v in data["impute"].items()}),
            vocabulary={k: tuple(v) for k, v in data["vocabulary"].items()},
            scale=ScaleParams(**{k: tuple(v) for k, v in data["scale"].items()}),
            retained=tuple(data["retained"]),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "PreprocessParams":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def fit_impute(train: FeatureMatrix) -> ImputeParams:
    if train.n_rows == 0:
        raise InputError("cannot fit imputation on an empty training set")
    observed = ~np.isnan(train.values)
    has_values = observed.any(axis=0)
    sums = np.where(observed, train.values, 0.0).sum(axis=0)
    means = sums / np.maximum(observed.sum(axis=0), 1)
    kept = [j for j in range(train.n_features) if has_values[j]]
    dropped = tuple(train.columns[j] for j in range(train.n_features) if not has_values[j])
    if dropped:
        logger.warning("impute: %d columns have no observed training value and are dropped", len(dropped))
    return ImputeParams(
        columns=tuple(train.columns[j] for j in kept),
        means=tuple(float(means[j]) for j in kept),
        dropped=dropped,
    )


def apply_impute(matrix: FeatureMatrix, params: ImputeParams) -> FeatureMatrix:
    out = matrix.take_columns(params.columns)
    values = out.values.copy()
    gaps = np.isnan(values)
    values[gaps] = np.broadcast_to(np.asarray(params.means, dtype=float), values.shape)[gaps]
    return replace(out, values=values)


def fit_apply_impute(train: FeatureMatrix, test: FeatureMatrix) -> tuple:
    """Mean imputation fitted on the observed training cells; returns (train', test', params)"""
    params = fit_impute(train)
    return apply_impute(train, params), apply_impute(test, params), params


def _token_column(name: str, token: str) -> str:
    slug = re.sub(r"\s+", "_", token)
    return f"{name}_{slug}"


def fit_encoding(train: FeatureMatrix) -> dict:
    """Sorted training vocabulary per categorical column; empty tokens are not a category"""
    return {
        name: tuple(sorted({str(t).strip() for t in tokens if str(t).strip()}))
        for name, tokens in train.categoricals.items()
    }


def apply_encoding(matrix: FeatureMatrix, vocabulary: dict) -> FeatureMatrix:
    """Append one 0/1 column per vocabulary token; tokens outside it encode as all zeros"""
    blocks, names = [matrix.values], list(matrix.columns)
    for name, tokens in vocabulary.items():
        if name not in matrix.categoricals:
            raise InputError(f"categorical column {name} is missing")
        raw = np.array([str(t).strip() for t in matrix.categoricals[name]], dtype=object)
        blocks.append(np.column_stack([raw == token for token in tokens]).astype(float)
                      if tokens else np.empty((matrix.n_rows, 0)))
        names.extend(_token_column(name, token) for token in tokens)
    remaining = {k: v for k, v in matrix.categoricals.items() if k not in vocabulary}
    return FeatureMatrix(matrix.subject_ids, names, np.hstack(blocks), matrix.labels, remaining)


def encode_categoricals(train: FeatureMatrix, test: FeatureMatrix) -> tuple:
    vocabulary = fit_encoding(train)
    return apply_encoding(train, vocabulary), apply_encoding(test, vocabulary), vocabulary


def fit_scale(train: FeatureMatrix) -> ScaleParams:
    """Population mean / sd per column; columns with max == min are dropped"""
    values = train.values
    if np.isnan(values).any():
        raise InputError("scaling needs imputed values")
    constant = values.max(axis=0) == values.min(axis=0) if train.n_rows else np.ones(train.n_features, bool)
    kept = [j for j in range(train.n_features) if not constant[j]]
    means = values.mean(axis=0) if train.n_rows else np.zeros(train.n_features)
    sds = values.std(axis=0) if train.n_rows else np.zeros(train.n_features)
    dropped = tuple(train.columns[j] for j in range(train.n_features) if constant[j])
    if dropped:
        logger.info("scale: %d zero-variance columns dropped", len(dropped))
    return ScaleParams(
        columns=tuple(train.columns[j] for j in kept),
        means=tuple(float(means[j]) for j in kept),
        sds=tuple(float(sds[j]) for j in kept),
        dropped=dropped,
    )


def apply_scale(matrix: FeatureMatrix, params: ScaleParams) -> FeatureMatrix:
    out = matrix.take_columns(params.columns)
    scaled = (out.values - np.asarray(params.means, dtype=float)) / np.asarray(params.sds, dtype=float)
    return replace(out, values=scaled.reshape(out.values.shape))


def fit_apply_scale(train: FeatureMatrix, test: FeatureMatrix) -> tuple:
    params = fit_scale(train)
    return apply_scale(train, params), apply_scale(test, params), params


def fit_preprocess(train: FeatureMatrix, test: FeatureMatrix) -> tuple:
    """
    Impute, encode and scale with every parameter fitted on `train`

    Returns:
        (train', test', PreprocessParams)
    """
    train, test, impute = fit_apply_impute(train, test)
    train, test, vocabulary = encode_categoricals(train, test)
    train, test, scale = fit_apply_scale(train, test)
    params = PreprocessParams(impute=impute, vocabulary=vocabulary, scale=scale, retained=scale.columns)
    return train, test, params


def apply_preprocess(matrix: FeatureMatrix, params: PreprocessParams, scaled: bool = True) -> FeatureMatrix:
    """Transform-only counterpart of fit_preprocess; `scaled=False` stops after encoding"""
    out = apply_encoding(apply_impute(matrix, params.impute), params.vocabulary)
    return apply_scale(out, params.scale) if scaled else out
