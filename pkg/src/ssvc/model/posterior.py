"""Variational posterior networks and the evaluation classifier.

Both posteriors share one trunk: the strided conv stack over the mel
spectrogram plus the LSTM that reads out a fixed-length feature.  They
differ only in their MLP heads; the z_u head additionally receives the
z_s value.  The evaluation classifier reuses the same architecture with
its own parameters and no text or speaker inputs, so it can never lean
on ground-truth conditioning when scoring synthesized audio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamStore, Tensor, concat
from ..autodiff.nn import batchnorm, conv2d, linear, lstm_cell
from .config import ModelConfig


@dataclass
class PosteriorOut:
    kind: str                      # "discrete" | "continuous"
    logits: Tensor | None = None   # (B, K) when discrete
    mean: Tensor | None = None     # (B, d) when continuous
    log_var: Tensor | None = None  # (B, d) when continuous


def posterior_trunk(
    params: ParamStore,
    prefix: str,
    cfg: ModelConfig,
    mel: np.ndarray,
    mel_mask: np.ndarray,
    train: bool = False,
) -> Tensor:
    """Conv stack + LSTM readout; returns (B, posterior_lstm_units)."""
    mel = np.asarray(mel)
    if mel.ndim != 3 or mel.shape[1] < 1:
        raise ValueError(f"mel must be (batch, frames >= 1, n_mels), got shape {mel.shape}")
    if mel.shape[2] != cfg.n_mels:
        raise ValueError(f"expected {cfg.n_mels} mel bins, got {mel.shape[2]}")
    dtype = params[f"{prefix}.conv.0.W"].data.dtype
    batch = mel.shape[0]

    x = Tensor(mel.astype(dtype)).reshape(batch, mel.shape[1], cfg.n_mels, 1)
    lengths = mel_mask.sum(axis=1).astype(np.int64)
    for i in range(len(cfg.posterior_conv_filters)):
        x = conv2d(
            x, params[f"{prefix}.conv.{i}.W"], params[f"{prefix}.conv.{i}.b"],
            stride=(2, 2), padding=(1, 1),
        )
        b, h, w, c = x.shape
        x = batchnorm(
            x.reshape(b * h * w, c),
            params[f"{prefix}.bn.{i}.gamma"], params[f"{prefix}.bn.{i}.beta"],
            params.buffer(f"{prefix}.bn.{i}.mean"), params.buffer(f"{prefix}.bn.{i}.var"),
            training=train,
        ).reshape(b, h, w, c).relu()
        lengths = (lengths + 1) // 2

    b, t, f, c = x.shape
    x = x.reshape(b, t, f * c)
    w_x, w_h, bias = params[f"{prefix}.lstm.Wx"], params[f"{prefix}.lstm.Wh"], params[f"{prefix}.lstm.b"]
    units = w_h.shape[0]
    h_state = Tensor(np.zeros((batch, units), dtype=dtype))
    c_state = Tensor(np.zeros((batch, units), dtype=dtype))
    lengths = np.maximum(lengths, 1)
    for step in range(t):
        m = Tensor((step < lengths).astype(dtype)).repeat_last(units)
        h_new, c_new = lstm_cell(x[:, step, :], h_state, c_state, w_x, w_h, bias)
        h_state = h_state + m * (h_new - h_state)
        c_state = c_state + m * (c_new - c_state)
    return h_state


def _head(params: ParamStore, name: str, feat: Tensor) -> Tensor:
    h = linear(feat, params[f"{name}.mlp.W"], params[f"{name}.mlp.b"]).tanh()
    return linear(h, params[f"{name}.out.W"], params[f"{name}.out.b"])


def posterior_zs(
    params: ParamStore,
    cfg: ModelConfig,
    mel: np.ndarray,
    mel_mask: np.ndarray,
    summary: Tensor,
    speaker_emb: Tensor,
    train: bool = False,
    trunk: Tensor | None = None,
) -> PosteriorOut:
    if trunk is None:
        trunk = posterior_trunk(params, "post", cfg, mel, mel_mask, train)
    out = _head(params, "post.zs", concat([trunk, summary, speaker_emb], axis=1))
    if cfg.z_s.kind == "discrete":
        return PosteriorOut(kind="discrete", logits=out)
    d = cfg.z_s.size
    return PosteriorOut(kind="continuous", mean=out[:, :d], log_var=out[:, d:])


def posterior_zu(
    params: ParamStore,
    cfg: ModelConfig,
    mel: np.ndarray,
    mel_mask: np.ndarray,
    summary: Tensor,
    speaker_emb: Tensor,
    z_s_value: Tensor,
    train: bool = False,
    trunk: Tensor | None = None,
) -> PosteriorOut:
    batch = summary.shape[0]
    if z_s_value.shape != (batch, cfg.z_s.width):
        raise ValueError(
            f"z_s_value must be ({batch}, {cfg.z_s.width}), got {z_s_value.shape}"
        )
    if trunk is None:
        trunk = posterior_trunk(params, "post", cfg, mel, mel_mask, train)
    feat = concat([trunk, summary, speaker_emb, z_s_value], axis=1)
    out = _head(params, "post.zu", feat)
    return PosteriorOut(
        kind="continuous", mean=out[:, : cfg.z_u_dim], log_var=out[:, cfg.z_u_dim:]
    )


def eval_classifier_forward(
    params: ParamStore,
    cfg: ModelConfig,
    mel: np.ndarray,
    mel_mask: np.ndarray,
    train: bool = False,
) -> Tensor:
    """K class logits from mel alone."""
    trunk = posterior_trunk(params, "cls", cfg, mel, mel_mask, train)
    return _head(params, "cls", trunk)
