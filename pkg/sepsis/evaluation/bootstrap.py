"""
Bootstrap Module
Percentile confidence interval for AUROC over resampled (score, label) pairs
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from ..config import BOOTSTRAP_B, CI_ALPHA
from ..errors import EvaluationError, ParameterError
from .metrics import check_two_classes, auroc

logger = logging.getLogger(__name__)

MAX_REDRAWS = 10


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    point: float
    lo: float
    hi: float
    samples: np.ndarray
    n_skipped: int = 0


def _resample_auroc(scores: np.ndarray, labels: np.ndarray, seed_seq: np.random.SeedSequence) -> float:
    rng = np.random.default_rng(seed_seq)
    n = len(labels)
    for _ in range(MAX_REDRAWS):
        idx = rng.integers(0, n, size=n)
        y = labels[idx]
        if y.any() and not y.all():
            return auroc(scores[idx], y)
    return float("nan")


def bootstrap_auroc_ci(scores, labels, B: int = BOOTSTRAP_B, alpha: float = CI_ALPHA, seed: int = 0,
                       progress: bool = False, desc: str = "bootstrap") -> BootstrapResult:
    """
    Percentile bootstrap CI of the AUROC

    Resample b draws from SeedSequence(seed).spawn(B)[b]; a one-class resample is redrawn up to
    10 times and then skipped. The interval uses linear interpolation between order statistics
    and is widened to contain the point estimate if it does not.
    """
    if B <= 0:
        raise ParameterError(f"B must be positive, got {B}")
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    scores, labels = check_two_classes(scores, labels)
    point = auroc(scores, labels)
    streams = np.random.SeedSequence(seed).spawn(B)
    values = np.array([
        _resample_auroc(scores, labels, seq)
        for seq in tqdm(streams, desc=desc, disable=not progress, leave=False)
    ])
    kept = values[~np.isnan(values)]
    n_skipped = len(values) - len(kept)
    if n_skipped:
        logger.warning("%s: %d of %d resamples had one class and were skipped", desc, n_skipped, B)
    if len(kept) == 0:
        raise EvaluationError("every bootstrap resample had a single class")
    lo, hi = np.percentile(kept, [100.0 * alpha / 2.0, 100.0 * (1.0 - alpha / 2.0)], method="linear")
    return BootstrapResult(point=point, lo=float(min(lo, point)), hi=float(max(hi, point)),
                           samples=kept, n_skipped=n_skipped)
