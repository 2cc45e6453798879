"""Mel-cepstral distortion with dynamic time warping.

Frame cost is the Euclidean distance between 13-coefficient cepstral
vectors.  The alignment DP uses three steps: diagonal at no extra cost,
and horizontal/vertical each adding a fixed warp penalty.  Both endpoint
pairs are anchored.  The result is total path cost divided by the number
of cells on the path; among equal-cost paths the shorter one wins, which
keeps the answer well defined and lets an exhaustive enumerator agree
with the DP exactly.
"""

from __future__ import annotations

import numpy as np

from .mel import MelSpectrogram, mfcc


def mcd_dtw(a: MelSpectrogram, b: MelSpectrogram, warp_penalty: float = 1.0) -> float:
    if a.config != b.config or a.sample_rate != b.sample_rate:
        raise ValueError(
            f"mel configs differ: {a.config} @ {a.sample_rate} Hz vs {b.config} @ {b.sample_rate} Hz"
        )
    ca = mfcc(a)
    cb = mfcc(b)
    diff = ca[:, None, :] - cb[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    return aligned_average_cost(dist, warp_penalty)


def aligned_average_cost(dist: np.ndarray, warp_penalty: float) -> float:
    """DP over a precomputed (T_a, T_b) cost matrix; see module docstring."""
    n, m = dist.shape
    if n < 1 or m < 1:
        raise ValueError("both sequences need at least one frame")
    big = np.inf
    cost = np.full((n, m), big)
    length = np.zeros((n, m), dtype=np.int64)
    cost[0, 0] = dist[0, 0]
    length[0, 0] = 1
    for i in range(1, n):
        cost[i, 0] = cost[i - 1, 0] + dist[i, 0] + warp_penalty
        length[i, 0] = i + 1
    for j in range(1, m):
        cost[0, j] = cost[0, j - 1] + dist[0, j] + warp_penalty
        length[0, j] = j + 1
    for i in range(1, n):
        for j in range(1, m):
            candidates = (
                (cost[i - 1, j - 1], length[i - 1, j - 1]),
                (cost[i - 1, j] + warp_penalty, length[i - 1, j]),
                (cost[i, j - 1] + warp_penalty, length[i, j - 1]),
            )
            best_c, best_l = min(candidates)
            cost[i, j] = best_c + dist[i, j]
            length[i, j] = best_l + 1
    return float(cost[n - 1, m - 1] / length[n - 1, m - 1])
