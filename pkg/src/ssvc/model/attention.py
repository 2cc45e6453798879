"""Monotonic GMM attention.

Each decoder step moves a set of Gaussian component means forward by a
softplus-positive increment, so the attention window can only travel
left to right over the text.  The alignment is the mixture density
evaluated at integer token positions; it is nonnegative but not
normalized, which is the usual formulation for this attention family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamStore, Tensor
from ..autodiff.nn import linear, softmax
from .config import ModelConfig

# keeps component spreads away from zero, where the density (and its
# gradient) would blow up
SIGMA_FLOOR = 1e-2


@dataclass
class AttentionState:
    mu: Tensor                       # (B, C) component means, graph-tracked
    alignment: np.ndarray | None     # (B, L) last alignment, detached
    cursor: np.ndarray | None        # (B,) weighted mean position, detached


def init_attention_state(batch: int, cfg: ModelConfig, dtype) -> AttentionState:
    return AttentionState(
        mu=Tensor(np.zeros((batch, cfg.gmm_components), dtype=dtype)),
        alignment=None,
        cursor=np.zeros(batch),
    )


def gmm_attention_step(
    params: ParamStore,
    cfg: ModelConfig,
    query: Tensor,
    state: AttentionState,
    text_emb: Tensor,
    token_mask: np.ndarray,
) -> tuple[AttentionState, Tensor]:
    """One attention update; returns (new state, context vector (B, D))."""
    batch, length, depth = text_emb.shape
    c = cfg.gmm_components
    dtype = text_emb.data.dtype

    z = linear(query, params["att.mlp.W"], params["att.mlp.b"]).tanh()
    p = linear(z, params["att.out.W"], params["att.out.b"])
    delta = p[:, :c].softplus()
    sigma = p[:, c: 2 * c].softplus() + SIGMA_FLOOR
    w = softmax(p[:, 2 * c:], axis=-1)

    mu = state.mu + delta

    positions = np.arange(length, dtype=dtype)
    mu_l = mu.repeat_last(length)          # (B, C, L)
    sigma_l = sigma.repeat_last(length)
    diff = (Tensor(positions) - mu_l) / sigma_l
    dens = (-0.5 * diff.square()).exp() / (sigma_l * math.sqrt(2.0 * math.pi))
    align = (w.repeat_last(length) * dens).sum(axis=1)          # (B, L)
    align = align * Tensor(token_mask.astype(dtype))

    context = (align.repeat_last(depth) * text_emb).sum(axis=1)  # (B, D)
    new_state = AttentionState(
        mu=mu,
        alignment=align.data.copy(),
        cursor=(w.data * mu.data).sum(axis=1),
    )
    return new_state, context
