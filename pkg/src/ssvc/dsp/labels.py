"""Control-attribute labels and their whitening transform.

Labels enter training whitened so that a standard-normal latent prior
is a sensible fit.  Default mode standardizes each attribute on its own
(the models each use a one-dimensional continuous latent); `joint` mode
whitens a pair of attributes with a full 2x2 transform for experiments
that want decorrelated labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def syllable_rate_label(syllable_count: int, duration_s: float) -> float:
    if duration_s <= 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    if syllable_count < 0:
        raise ValueError(f"syllable count must be nonnegative, got {syllable_count}")
    return syllable_count / duration_s


@dataclass
class WhitenStats:
    mode: str                 # "per_attribute" or "joint"
    mean: np.ndarray          # (A,)
    scale: np.ndarray | None = None    # (A,) stds, per-attribute mode
    matrix: np.ndarray | None = None   # (A, A) whitening matrix, joint mode
    inverse: np.ndarray | None = None  # (A, A) its inverse, joint mode


def fit_whitening(labels: np.ndarray, mode: str = "per_attribute") -> WhitenStats:
    """Fit on raw training labels, shape (N,) for one attribute or (N, A)."""
    arr = np.asarray(labels, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    if arr.shape[0] < 2:
        raise ValueError(f"need at least 2 values to fit whitening, got {arr.shape[0]}")
    mean = arr.mean(axis=0)
    if mode == "per_attribute":
        scale = arr.std(axis=0)
        if np.any(scale <= 0):
            bad = int(np.argmin(scale))
            raise ValueError(f"attribute {bad} has zero variance; cannot whiten")
        return WhitenStats("per_attribute", mean, scale=scale)
    if mode == "joint":
        centered = arr - mean
        cov = centered.T @ centered / arr.shape[0]
        eigval, eigvec = np.linalg.eigh(cov)
        if np.any(eigval <= 0):
            raise ValueError("label covariance is singular; cannot jointly whiten")
        matrix = eigvec @ np.diag(eigval**-0.5) @ eigvec.T
        inverse = eigvec @ np.diag(eigval**0.5) @ eigvec.T
        return WhitenStats("joint", mean, matrix=matrix, inverse=inverse)
    raise ValueError(f"unknown whitening mode {mode!r}")


def apply_whitening(stats: WhitenStats, value) -> np.ndarray:
    v = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if stats.mode == "per_attribute":
        out = (v - stats.mean) / stats.scale
    else:
        out = (v - stats.mean) @ stats.matrix.T
    return out


def invert_whitening(stats: WhitenStats, z) -> np.ndarray:
    v = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if stats.mode == "per_attribute":
        return v * stats.scale + stats.mean
    return v @ stats.inverse.T + stats.mean
