"""
T-Test Module
Two-sided Student / Welch t-tests from samples or summary statistics, and the train/test cohort table
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..config import TTEST_VARIANTS
from ..errors import InputError, ParameterError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: float
    degenerate: bool = False


@dataclass(frozen=True)
class TTestRow:
    feature: str
    train_mean: float
    train_sd: float
    test_mean: float
    test_sd: float
    t: float
    p: float
    degenerate: bool = False


def t_test_from_stats(mean1: float, sd1: float, n1: int, mean2: float, sd2: float, n2: int,
                      variant: str = "student") -> TTestResult:
    """
    Two-sided t-test from means, sample standard deviations and sizes

    Zero standard error: equal means give t = 0, p = 1; otherwise the result is flagged
    degenerate with an infinite t and p = 0.
    """
    if variant not in TTEST_VARIANTS:
        raise ParameterError(f"unknown t-test variant {variant!r}")
    if n1 < 2 or n2 < 2:
        raise InputError(f"each sample needs at least 2 values (got {n1} and {n2})")
    v1, v2 = sd1 ** 2, sd2 ** 2
    if variant == "student":
        df = n1 + n2 - 2.0
        pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        se = math.sqrt(pooled * (1.0 / n1 + 1.0 / n2))
    else:
        a, b = v1 / n1, v2 / n2
        se = math.sqrt(a + b)
        df = (a + b) ** 2 / (a ** 2 / (n1 - 1) + b ** 2 / (n2 - 1)) if a + b > 0 else n1 + n2 - 2.0
    diff = mean1 - mean2
    if se == 0.0:
        if diff == 0.0:
            return TTestResult(t=0.0, p=1.0, df=df)
        return TTestResult(t=math.copysign(math.inf, diff), p=0.0, df=df, degenerate=True)
    t = diff / se
    p = float(2.0 * stats.t.sf(abs(t), df))
    return TTestResult(t=float(t), p=min(p, 1.0), df=float(df))


def t_test(sample_a, sample_b, variant: str = "student") -> TTestResult:
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise InputError(f"each sample needs at least 2 values (got {len(a)} and {len(b)})")
    return t_test_from_stats(float(a.mean()), float(a.std(ddof=1)), len(a),
                             float(b.mean()), float(b.std(ddof=1)), len(b), variant)


def cohort_table(train, test, variant: str = "student") -> list:
    """
    One t-test row per shared feature column

    Args:
        train: Imputed, unscaled training FeatureMatrix
        test: Test FeatureMatrix with the same columns
    """
    if tuple(train.columns) != tuple(test.columns):
        raise InputError("train and test matrices must share columns")
    rows = []
    for j, name in enumerate(train.columns):
        a, b = train.values[:, j], test.values[:, j]
        result = t_test(a, b, variant)
        rows.append(TTestRow(
            feature=name,
            train_mean=float(a.mean()), train_sd=float(a.std(ddof=1)),
            test_mean=float(b.mean()), test_sd=float(b.std(ddof=1)),
            t=result.t, p=result.p, degenerate=result.degenerate,
        ))
    n_degenerate = sum(r.degenerate for r in rows)
    if n_degenerate:
        logger.warning("cohort table: %d features have zero variance in both cohorts", n_degenerate)
    return rows
