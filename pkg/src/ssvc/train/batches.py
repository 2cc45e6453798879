"""Turning corpus utterances into padded objective batches."""

from __future__ import annotations

import numpy as np

from ..corpus import Utterance
from ..model import ModelConfig, pad_mels, pad_tokens
from ..objective import ObjectiveBatch


def batch_from_utterances(utts: list[Utterance], cfg: ModelConfig,
                          dtype=np.float32) -> ObjectiveBatch:
    """Pad a list of utterances into one batch.

    Labels come from the corpus supervision fields; rows without a label
    get a placeholder value that the objective never reads (it slices
    the supervised subset first).
    """
    ids, tmask = pad_tokens([u.tokens for u in utts])
    frames, fmask = pad_mels([u.mel.frames.astype(dtype) for u in utts],
                             multiple=cfg.reduction_factor)
    speakers = np.array([u.speaker_id for u in utts], dtype=np.int64)
    if cfg.z_s.kind == "discrete":
        sup = np.array([u.label_discrete is not None for u in utts])
        labels = np.array([u.label_discrete if u.label_discrete is not None else 0
                           for u in utts], dtype=np.int64)
    else:
        sup = np.array([u.label_continuous is not None for u in utts])
        if sup.any() and cfg.z_s.width != 1:
            raise ValueError(
                "corpus continuous labels are scalars; a supervised run "
                f"needs z_s width 1, model has {cfg.z_s.width}")
        raw = [u.label_continuous if u.label_continuous is not None else 0.0
               for u in utts]
        labels = np.array(raw, dtype=np.float64)[:, None]
    if not sup.any():
        return ObjectiveBatch(ids, tmask, speakers, frames, fmask,
                              labels=None, sup_mask=sup)
    return ObjectiveBatch(ids, tmask, speakers, frames, fmask,
                          labels=labels, sup_mask=sup)


def epoch_chunks(order: np.ndarray, batch_size: int, min_tail: int = 8) -> list[np.ndarray]:
    """Split a permutation into contiguous batches.

    A final fragment smaller than ``min_tail`` is merged into the
    previous batch so batchnorm always sees a healthy batch; with fewer
    than ``min_tail`` utterances overall, everything is one batch.
    """
    n = len(order)
    if n == 0:
        return []
    chunks = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(chunks) > 1 and len(chunks[-1]) < min_tail:
        tail = chunks.pop()
        chunks[-1] = np.concatenate([chunks[-1], tail])
    return chunks
