"""SMOTE oversampling of the minority class in embedding space."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError, DataError


class SmoteSample(NamedTuple):
    points: np.ndarray
    base: np.ndarray  # index into the minority rows
    neighbor: np.ndarray
    gap: np.ndarray


def minority_label(labels: np.ndarray) -> int:
    pos = int(np.sum(labels == 1))
    return 1 if pos <= len(labels) - pos else 0


def smote_samples(X_min: np.ndarray, n_new: int, k: int, rng: np.random.Generator) -> SmoteSample:
    """``n_new`` interpolations between random minority rows and one of their k nearest minority neighbours."""
    m = len(X_min)
    if n_new == 0:
        return SmoteSample(np.zeros((0, X_min.shape[1])), np.zeros(0, int), np.zeros(0, int), np.zeros(0))
    if m < 2:
        raise DataError(f"SMOTE needs at least 2 minority points to interpolate, got {m}")
    sq = (X_min**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X_min @ X_min.T
    np.fill_diagonal(d2, np.inf)
    kk = min(k, m - 1)
    nn = np.argsort(d2, axis=1, kind="stable")[:, :kk]
    base = rng.integers(m, size=n_new)
    neighbor = nn[base, rng.integers(kk, size=n_new)]
    gap = rng.random(n_new)
    points = X_min[base] + gap[:, None] * (X_min[neighbor] - X_min[base])
    return SmoteSample(points, base, neighbor, gap)


def smote_oversample(emb, labels, rate: float, k: int = 5, rng: np.random.Generator | None = None,
                     return_parents: bool = False):
    """Append ``floor(rate * |minority|)`` synthetic minority rows.

    Original rows come first and are returned untouched. With
    ``return_parents`` the :class:`SmoteSample` (parent indices refer to
    rows of the original ``emb``) is returned as a third value.
    """
    if rate < 0:
        raise ConfigError(f"SMOTE rate must be non-negative, got {rate}")
    emb = np.asarray(emb, dtype=np.float64)
    labels = np.asarray(labels)
    if rate == 0:
        return (emb, labels, None) if return_parents else (emb, labels)
    if rng is None:
        raise ConfigError("SMOTE with a positive rate needs an rng")
    minority = minority_label(labels)
    rows = np.nonzero(labels == minority)[0]
    n_new = math.floor(rate * len(rows))
    sample = smote_samples(emb[rows], n_new, k, rng)
    out_emb = np.vstack([emb, sample.points])
    out_labels = np.concatenate([labels, np.full(n_new, minority, dtype=labels.dtype)])
    if return_parents:
        sample = sample._replace(base=rows[sample.base], neighbor=rows[sample.neighbor])
        return out_emb, out_labels, sample
    return out_emb, out_labels
