"""Latent conditioning and the autoregressive spectrogram decoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamStore, Rng, ShapeError, Tensor, concat
from ..autodiff.nn import dropout, linear, lstm_cell
from .attention import AttentionState, gmm_attention_step, init_attention_state
from .batching import MEL_PAD_VALUE
from .config import ModelConfig
from .encoder import apply_prenet, broadcast_over_positions, _mask3


def condition_on_latents(cfg: ModelConfig, text_emb: Tensor, z_u: Tensor,
                         z_s: Tensor, token_mask: np.ndarray) -> Tensor:
    """Concatenate [z_u, z_s] onto every text position."""
    batch, length, _ = text_emb.shape
    if z_u.shape != (batch, cfg.z_u_dim):
        raise ShapeError(f"z_u must be ({batch}, {cfg.z_u_dim}), got {z_u.shape}")
    if z_s.shape != (batch, cfg.z_s.width):
        raise ShapeError(f"z_s must be ({batch}, {cfg.z_s.width}), got {z_s.shape}")
    dtype = text_emb.data.dtype
    cond = concat([
        text_emb,
        broadcast_over_positions(z_u, length),
        broadcast_over_positions(z_s, length),
    ], axis=2)
    return cond * _mask3(token_mask, cfg.conditioned_dim, dtype)


def _regularize_state(cfg: ModelConfig, h_new: Tensor, h_prev: Tensor,
                      train: bool, rng: Rng | None) -> Tensor:
    """Recurrent regularization: plain dropout, or zoneout if configured."""
    if not train or cfg.recurrent_dropout <= 0.0:
        return h_new
    if cfg.use_zoneout:
        keep = (rng.uniform(h_new.shape) >= cfg.recurrent_dropout).astype(h_new.data.dtype)
        return h_prev + Tensor(keep) * (h_new - h_prev)
    return dropout(h_new, cfg.recurrent_dropout, rng, True)


@dataclass
class DecodeResult:
    frames: Tensor                 # (B, T_out, n_mels) predicted means
    alignments: np.ndarray         # (steps, B, L), detached
    stop_frames: np.ndarray        # (B,) frames valid before the stop rule fired


def decode(
    params: ParamStore,
    cfg: ModelConfig,
    cond_emb: Tensor,
    token_mask: np.ndarray,
    teacher: np.ndarray | None = None,
    train: bool = False,
    rng: Rng | None = None,
    max_frames: int = 400,
) -> DecodeResult:
    """Run the decoder, teacher-forced when `teacher` frames are given.

    In train mode the input at each step is the previous ground-truth
    frame and the step count is fixed by the teacher length.  Without a
    teacher the decoder feeds back its own last frame and stops once
    every attention cursor has moved `stop_margin` past its text end
    (or at `max_frames`).
    """
    if train and teacher is None:
        raise ValueError("train mode requires teacher frames")
    batch, length, _ = cond_emb.shape
    r = cfg.reduction_factor
    dtype = cond_emb.data.dtype

    if teacher is not None:
        if teacher.ndim != 3 or teacher.shape[0] != batch or teacher.shape[2] != cfg.n_mels:
            raise ShapeError(f"teacher must be ({batch}, T, {cfg.n_mels}), got {teacher.shape}")
        if teacher.shape[1] % r != 0:
            raise ValueError(
                f"teacher length {teacher.shape[1]} not a multiple of reduction factor {r}"
            )
        n_steps = teacher.shape[1] // r
    else:
        n_steps = (max_frames + r - 1) // r

    units = cfg.decoder_lstm_units
    att_units = cfg.attention_lstm_units
    zeros = lambda n: Tensor(np.zeros((batch, n), dtype=dtype))
    att_h, att_c = zeros(att_units), zeros(att_units)
    lstm_states = [(zeros(units), zeros(units)) for _ in range(cfg.decoder_layers)]
    att_state = init_attention_state(batch, cfg, dtype)
    # The go frame is silence in log-mel units, matching the padding
    # value, so the first prenet input lives on the same scale as real
    # frames instead of sitting exactly on the relu kink at zero.
    prev_frame = Tensor(np.full((batch, cfg.n_mels), MEL_PAD_VALUE, dtype=dtype))
    context = zeros(cfg.conditioned_dim)

    text_len = token_mask.sum(axis=1)
    done = np.zeros(batch, dtype=bool)
    stop_frames = np.full(batch, n_steps * r, dtype=np.int64)

    outputs: list[Tensor] = []
    alignments: list[np.ndarray] = []
    for step in range(n_steps):
        pn = apply_prenet(params, "dec.prenet", cfg, prev_frame, train, rng)
        h_new, att_c = lstm_cell(
            concat([pn, context], axis=1), att_h, att_c,
            params["att.lstm.Wx"], params["att.lstm.Wh"], params["att.lstm.b"],
        )
        att_h = _regularize_state(cfg, h_new, att_h, train, rng)

        att_state, context = gmm_attention_step(
            params, cfg, att_h, att_state, cond_emb, token_mask
        )
        alignments.append(att_state.alignment)

        x = concat([att_h, context], axis=1)
        for i in range(cfg.decoder_layers):
            h, c = lstm_states[i]
            h_new, c_new = lstm_cell(
                x, h, c,
                params[f"dec.lstm.{i}.Wx"], params[f"dec.lstm.{i}.Wh"], params[f"dec.lstm.{i}.b"],
            )
            h_new = _regularize_state(cfg, h_new, h, train, rng)
            lstm_states[i] = (h_new, c_new)
            x = h_new if i == 0 else h_new + x     # residual between LSTM layers
        frames = linear(concat([x, context], axis=1), params["dec.out.W"], params["dec.out.b"])
        frames = frames.reshape(batch, r, cfg.n_mels)
        outputs.append(frames)

        if teacher is not None:
            prev_frame = Tensor(np.ascontiguousarray(teacher[:, step * r + r - 1, :], dtype=dtype))
        else:
            prev_frame = frames[:, r - 1, :]
            newly_done = ~done & (att_state.cursor > text_len + cfg.stop_margin)
            stop_frames[newly_done] = (step + 1) * r
            done |= newly_done
            if done.all():
                break

    frames_out = concat(outputs, axis=1)
    if teacher is None and frames_out.shape[1] > max_frames:
        frames_out = frames_out[:, :max_frames, :]
    return DecodeResult(
        frames=frames_out,
        alignments=np.stack(alignments),
        stop_frames=np.minimum(stop_frames, frames_out.shape[1]),
    )
