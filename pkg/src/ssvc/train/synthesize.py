"""Free-running synthesis from a trained checkpoint."""

from __future__ import annotations

import numpy as np

from ..autodiff import Rng, Tensor, derive_seed, no_grad
from ..autodiff.nn import one_hot
from ..dsp import MelConfig, MelSpectrogram
from ..model import (
    ModelConfig,
    condition_on_latents,
    decode,
    encode_text,
    load_model,
)


def coerce_control(cfg: ModelConfig, control, batch: int, dtype) -> np.ndarray:
    """Turn a class id or scalar/vector control into a (B, width) array.

    Continuous values outside the training range are accepted on
    purpose; pushing past the data is the point of the control.
    """
    spec = cfg.z_s
    if spec.kind == "discrete":
        arr = np.asarray(control)
        if arr.size != 1 or not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("a discrete checkpoint takes a single integer class id")
        k = int(arr.reshape(()))
        if not 0 <= k < spec.size:
            raise ValueError(f"class {k} outside [0, {spec.size}) for this checkpoint")
        return one_hot(np.full(batch, k), spec.size, dtype=dtype)
    vec = np.atleast_1d(np.asarray(control, dtype=dtype))
    if vec.shape != (spec.width,):
        raise ValueError(
            f"continuous control needs {spec.width} value(s), got shape {vec.shape}")
    return np.repeat(vec[None, :], batch, axis=0)


def synthesize_batch(params, cfg: ModelConfig, tokens_list, speaker_ids,
                     z_s: np.ndarray, z_u: np.ndarray,
                     max_frames: int = 400) -> list[np.ndarray]:
    """Decode without a teacher; returns per-utterance (T_i, n_mels) frames."""
    from ..model import pad_tokens

    ids, tmask = pad_tokens(list(tokens_list))
    speakers = np.asarray(speaker_ids, dtype=np.int64)
    with no_grad():
        text = encode_text(params, cfg, ids, tmask, speakers)
        cond = condition_on_latents(cfg, text, Tensor(z_u), Tensor(z_s), tmask)
        res = decode(params, cfg, cond, tmask, max_frames=max_frames)
    out = res.frames.data
    return [out[i, :max(int(res.stop_frames[i]), cfg.reduction_factor)]
            for i in range(out.shape[0])]


def prior_z_u(cfg: ModelConfig, batch: int, mode: str, seed: int, dtype) -> np.ndarray:
    if mode == "mean":
        return np.zeros((batch, cfg.z_u_dim), dtype=dtype)
    if mode == "sample":
        return Rng(derive_seed(seed, "zu-prior")).normal((batch, cfg.z_u_dim)).astype(dtype)
    raise ValueError(f"z_u mode must be 'mean' or 'sample', got {mode!r}")


def synthesize(checkpoint_path, tokens, control, z_u_mode: str = "mean",
               seed: int = 0, speaker: int = 0, max_frames: int = 400,
               mel_cfg: MelConfig | None = None) -> MelSpectrogram:
    """One utterance from a checkpoint: control fixed, z_u from the prior."""
    cfg, params, meta = load_model(checkpoint_path)
    if meta.get("kind", "model") != "model":
        raise ValueError(f"{checkpoint_path} is not a synthesis model checkpoint")
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.ndim != 1 or tokens.size == 0:
        raise ValueError("tokens must be a nonempty 1-d id sequence")
    if tokens.min() < 0 or tokens.max() >= cfg.vocab_size:
        raise ValueError(f"token ids must lie in [0, {cfg.vocab_size})")
    if not 0 <= speaker < cfg.speaker_count:
        raise ValueError(f"speaker {speaker} outside [0, {cfg.speaker_count})")
    dtype = params.parameters()[0][1].data.dtype
    z_s = coerce_control(cfg, control, 1, dtype)
    z_u = prior_z_u(cfg, 1, z_u_mode, seed, dtype)
    frames = synthesize_batch(params, cfg, [tokens], [speaker], z_s, z_u,
                              max_frames=max_frames)[0]
    return MelSpectrogram(frames.astype(np.float32), mel_cfg or MelConfig())
