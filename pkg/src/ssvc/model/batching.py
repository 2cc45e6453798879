"""Padding variable-length utterances into rectangular batches."""

from __future__ import annotations

import numpy as np

from ..dsp.mel import LOG_FLOOR

MEL_PAD_VALUE = float(np.log(LOG_FLOOR))


def pad_tokens(token_seqs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad token id sequences with 0; returns (ids (B,L), mask (B,L))."""
    if not token_seqs:
        raise ValueError("empty batch")
    max_len = max(len(t) for t in token_seqs)
    ids = np.zeros((len(token_seqs), max_len), dtype=np.int64)
    mask = np.zeros((len(token_seqs), max_len), dtype=np.float64)
    for i, t in enumerate(token_seqs):
        if len(t) == 0:
            raise ValueError(f"utterance {i} has no tokens")
        ids[i, : len(t)] = t
        mask[i, : len(t)] = 1.0
    return ids, mask


def pad_mels(
    mels: list[np.ndarray], multiple: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad (T, n_mels) frame arrays with log-floor silence.

    The padded length is the batch maximum rounded up to `multiple`
    (the decoder's reduction factor).  Returns (frames (B,T,n_mels),
    mask (B,T)).
    """
    if not mels:
        raise ValueError("empty batch")
    n_mels = mels[0].shape[1]
    max_len = max(m.shape[0] for m in mels)
    max_len = ((max_len + multiple - 1) // multiple) * multiple
    frames = np.full((len(mels), max_len, n_mels), MEL_PAD_VALUE, dtype=mels[0].dtype)
    mask = np.zeros((len(mels), max_len), dtype=np.float64)
    for i, m in enumerate(mels):
        if m.shape[0] == 0:
            raise ValueError(f"utterance {i} has no frames")
        if m.shape[1] != n_mels:
            raise ValueError(f"mixed mel widths in batch: {m.shape[1]} vs {n_mels}")
        frames[i, : m.shape[0]] = m
        mask[i, : m.shape[0]] = 1.0
    return frames, mask
