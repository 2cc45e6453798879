"""Sequence-to-sequence synthesis model with latent conditioning."""

from .attention import (
    SIGMA_FLOOR,
    AttentionState,
    gmm_attention_step,
    init_attention_state,
)
from .batching import MEL_PAD_VALUE, pad_mels, pad_tokens
from .checkpoint import load_checkpoint, load_model, save_checkpoint
from .config import LatentSpec, ModelConfig, desk_scale, full_scale, micro_scale
from .decoder import DecodeResult, condition_on_latents, decode
from .encoder import (
    apply_prenet,
    broadcast_over_positions,
    encode_text,
    masked_gru,
    speaker_embedding,
    text_summary,
)
from .init import build_classifier_params, build_params, conv_stack_freq_out
from .likelihood import laplace_log_likelihood, laplace_log_likelihood_rows
from .posterior import (
    PosteriorOut,
    eval_classifier_forward,
    posterior_trunk,
    posterior_zs,
    posterior_zu,
)

__all__ = [
    "SIGMA_FLOOR",
    "AttentionState",
    "gmm_attention_step",
    "init_attention_state",
    "MEL_PAD_VALUE",
    "pad_mels",
    "pad_tokens",
    "load_checkpoint",
    "load_model",
    "save_checkpoint",
    "LatentSpec",
    "ModelConfig",
    "desk_scale",
    "full_scale",
    "micro_scale",
    "DecodeResult",
    "condition_on_latents",
    "decode",
    "apply_prenet",
    "broadcast_over_positions",
    "encode_text",
    "masked_gru",
    "speaker_embedding",
    "text_summary",
    "build_classifier_params",
    "build_params",
    "conv_stack_freq_out",
    "laplace_log_likelihood",
    "laplace_log_likelihood_rows",
    "PosteriorOut",
    "eval_classifier_forward",
    "posterior_trunk",
    "posterior_zs",
    "posterior_zu",
]
