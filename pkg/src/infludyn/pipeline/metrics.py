"""Mann-Whitney AUC and stratified bootstrap intervals."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from ..errors import DataError


def _split(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise DataError(f"scores {scores.shape} and labels {labels.shape} differ in shape")
    pos, neg = scores[labels == 1], scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("AUC needs both classes present")
    return pos, neg


def _auc_from(pos: np.ndarray, neg: np.ndarray) -> float:
    ranks = rankdata(np.concatenate([pos, neg]))
    n1, n0 = len(pos), len(neg)
    u = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def auc(scores, labels) -> float:
    """Fraction of positive/negative pairs ranked correctly, ties counting one half."""
    return _auc_from(*_split(scores, labels))


class BootstrapCI(NamedTuple):
    mean: float
    half_width: float
    samples: np.ndarray


def bootstrap_ci(scores, labels, B: int = 1000, alpha: float = 0.05,
                 rng: np.random.Generator | None = None) -> BootstrapCI:
    """Percentile interval from ``B`` class-stratified resamples.

    Each resample draws positives and negatives separately with
    replacement, keeping both class counts fixed.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    pos, neg = _split(scores, labels)
    rng = np.random.default_rng(0) if rng is None else rng
    samples = np.empty(B)
    for b in range(B):
        p = pos[rng.integers(len(pos), size=len(pos))]
        q = neg[rng.integers(len(neg), size=len(neg))]
        samples[b] = _auc_from(p, q)
    lo, hi = np.quantile(samples, [alpha / 2.0, 1.0 - alpha / 2.0])
    return BootstrapCI(float(samples.mean()), float((hi - lo) / 2.0), samples)
