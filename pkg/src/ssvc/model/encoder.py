"""Text-side networks: prenet, CBHG-lite encoder, text summary.

The encoder follows the CBHG recipe at reduced depth: a bank of
convolutions with widths 1..K, stride-1 max pooling, two projection
convolutions with a residual connection back to the prenet output, a
couple of highway layers, and a bidirectional GRU.  A learned speaker
embedding is concatenated onto every position at the end.

All functions are batched; padded positions are kept at zero and
recurrent states only update where the mask is 1, so results for an
utterance do not depend on how much padding the batch forced onto it
(up to conv edge effects, which see zeros either way).
"""

from __future__ import annotations

import numpy as np

from ..autodiff import ParamStore, Rng, Tensor, concat, stack
from ..autodiff.nn import conv1d, dropout, embedding, gru_cell, highway, linear, max_pool1d_same
from .config import ModelConfig


def apply_prenet(params: ParamStore, prefix: str, cfg: ModelConfig, x: Tensor,
                 train: bool, rng: Rng | None) -> Tensor:
    for i in range(len(cfg.prenet_dims)):
        x = linear(x, params[f"{prefix}.{i}.W"], params[f"{prefix}.{i}.b"]).relu()
        x = dropout(x, cfg.prenet_dropout, rng, train)
    return x


def _mask3(mask: np.ndarray, depth: int, dtype) -> Tensor:
    """(B, L) 0/1 mask as a (B, L, depth) constant tensor."""
    return Tensor(mask.astype(dtype)).repeat_last(depth)


def masked_gru(params: ParamStore, name: str, x: Tensor, mask: np.ndarray,
               reverse: bool = False) -> tuple[Tensor, Tensor]:
    """Run a GRU over axis 1 of (B, L, D), freezing the state where mask is 0.

    Returns (per-position states (B, L, units), final state (B, units)).
    In reverse mode the scan runs right-to-left and "final" means the
    state after the leftmost position.
    """
    w_x, w_h, b = params[f"{name}.Wx"], params[f"{name}.Wh"], params[f"{name}.b"]
    batch, length = x.shape[0], x.shape[1]
    units = w_h.shape[0]
    h = Tensor(np.zeros((batch, units), dtype=x.data.dtype))
    order = range(length - 1, -1, -1) if reverse else range(length)
    slots: list[Tensor | None] = [None] * length
    for t in order:
        m = Tensor(mask[:, t].astype(x.data.dtype)).repeat_last(units)
        h_new = gru_cell(x[:, t, :], h, w_x, w_h, b)
        h = h + m * (h_new - h)
        slots[t] = h
    return stack(slots, axis=1), h


def speaker_embedding(params: ParamStore, speaker_ids: np.ndarray) -> Tensor:
    return embedding(np.asarray(speaker_ids, dtype=np.int64), params["enc.speaker"])


def broadcast_over_positions(v: Tensor, length: int) -> Tensor:
    """Tile a (B, D) vector to (B, length, D)."""
    return v.repeat_last(length).transpose((0, 2, 1))


def encode_text(params: ParamStore, cfg: ModelConfig, tokens: np.ndarray,
                token_mask: np.ndarray, speaker_ids: np.ndarray,
                train: bool = False, rng: Rng | None = None) -> Tensor:
    """Token ids (B, L) to per-position embeddings (B, L, text_dim)."""
    tokens = np.asarray(tokens)
    if tokens.ndim != 2:
        raise ValueError(f"tokens must be (batch, length), got shape {tokens.shape}")
    if tokens.min() < 0 or tokens.max() >= cfg.vocab_size:
        raise ValueError(
            f"token ids must lie in [0, {cfg.vocab_size}), got range "
            f"[{tokens.min()}, {tokens.max()}]"
        )
    length = tokens.shape[1]
    dtype = params["enc.embed"].data.dtype

    x = embedding(tokens.astype(np.int64), params["enc.embed"])
    x = apply_prenet(params, "enc.prenet", cfg, x, train, rng)
    p_out = x.shape[2]
    x = x * _mask3(token_mask, p_out, dtype)
    prenet_out = x

    # convolution bank, widths 1..K; even widths produce one extra
    # position under symmetric padding, cropped back to L
    bank = []
    for k in range(1, cfg.bank_k + 1):
        y = conv1d(x, params[f"enc.bank.{k}.W"], params[f"enc.bank.{k}.b"], padding=k // 2)
        y = y[:, :length, :].relu()
        bank.append(y * _mask3(token_mask, cfg.bank_channels, dtype))
    y = concat(bank, axis=2)
    y = max_pool1d_same(y, 2)
    y = y * _mask3(token_mask, y.shape[2], dtype)
    y = conv1d(y, params["enc.proj1.W"], params["enc.proj1.b"], padding=1).relu()
    y = y * _mask3(token_mask, cfg.proj_channels, dtype)
    y = conv1d(y, params["enc.proj2.W"], params["enc.proj2.b"], padding=1)
    x = prenet_out + y * _mask3(token_mask, p_out, dtype)

    for i in range(cfg.highway_layers):
        x = highway(
            x,
            params[f"enc.highway.{i}.h.W"], params[f"enc.highway.{i}.h.b"],
            params[f"enc.highway.{i}.t.W"], params[f"enc.highway.{i}.t.b"],
        )

    fwd, _ = masked_gru(params, "enc.gru_f", x, token_mask)
    bwd, _ = masked_gru(params, "enc.gru_b", x, token_mask, reverse=True)
    out = concat([fwd, bwd], axis=2)

    spk = broadcast_over_positions(speaker_embedding(params, speaker_ids), length)
    out = concat([out, spk], axis=2)
    return out * _mask3(token_mask, cfg.text_dim, dtype)


def text_summary(params: ParamStore, cfg: ModelConfig, text_emb: Tensor,
                 token_mask: np.ndarray) -> Tensor:
    """Fixed-length utterance summary: final state of a GRU over positions."""
    _, final = masked_gru(params, "summary.gru", text_emb, token_mask)
    return final
