"""Finite-difference verification of the full objective's gradients.

Runs the complete pipeline (encoder, posteriors, decoder, objective) on
a tiny 64-bit model with a mixed supervised/unsupervised batch and
compares the backward pass against central differences along random
parameter-space directions.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import Rng, default_dtype
from ..autodiff.gradcheck import GradCheckReport, gradcheck_directional
from ..model import LatentSpec, build_params, micro_scale, pad_mels, pad_tokens
from ..objective import ObjectiveBatch, objective_total

GRADCHECK_TOL = 1e-4


def _micro_batch(cfg, seed: int) -> ObjectiveBatch:
    rng = Rng(seed)
    toks = [rng.integers(cfg.vocab_size, (4,)), rng.integers(cfg.vocab_size, (3,))]
    ids, tmask = pad_tokens(toks)
    mels = [-6 + 2 * rng.normal((t, cfg.n_mels)) for t in (18, 14)]
    frames, fmask = pad_mels(mels, multiple=cfg.reduction_factor)
    if cfg.z_s.kind == "discrete":
        labels = np.array([cfg.z_s.size - 1, 0])
    else:
        labels = rng.normal((2, cfg.z_s.width))
    return ObjectiveBatch(ids, tmask, np.array([0, 1]), frames, fmask,
                          labels=labels, sup_mask=np.array([True, False]))


def micro_gradcheck(kind: str, seed: int = 0, n_directions: int = 3) -> GradCheckReport:
    """Directional gradient check of the full objective at micro scale."""
    if kind not in ("discrete", "continuous"):
        raise ValueError(f"latent kind must be 'discrete' or 'continuous', got {kind!r}")
    spec = LatentSpec(kind, 3 if kind == "discrete" else 1)
    with default_dtype("float64"):
        cfg = micro_scale(spec)
        params = build_params(cfg, Rng(seed + 11))
        batch = _micro_batch(cfg, seed + 23)

        def loss():
            bt = objective_total(params, cfg, batch, Rng(seed + 47),
                                 alpha=1.0, gamma=3.0)
            return -bt.total

        return gradcheck_directional(loss, params.parameters(), Rng(seed + 91),
                                     n_directions=n_directions)
