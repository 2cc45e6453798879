"""Bias-corrected Adam with moments persisted as ParamStore buffers.

Keeping the first/second moments and the step counter inside the store
means a checkpoint of ``state_arrays()`` carries the full optimizer
state, which is what makes resumed runs bit-identical.
"""

from __future__ import annotations

import logging

import numpy as np

from ..autodiff import ParamStore
from .config import TrainConfig

log = logging.getLogger("ssvc.train")


def init_adam(params: ParamStore) -> None:
    """Register zeroed moment buffers for every trainable parameter."""
    if not params.has_buffer("adam.t"):
        params.add_buffer("adam.t", np.zeros(()))
    for name, t in params.parameters():
        if not params.has_buffer(f"adam.m.{name}"):
            params.add_buffer(f"adam.m.{name}", np.zeros_like(t.data))
            params.add_buffer(f"adam.v.{name}", np.zeros_like(t.data))


def adam_step(params: ParamStore, cfg: TrainConfig) -> bool:
    """Apply one update in place; returns False if the step was skipped.

    Parameters whose ``grad`` is None (not part of the current loss) are
    left untouched.  Any non-finite gradient skips the whole step and
    logs the offending parameter; moments and the step counter are not
    advanced in that case, so a skipped step is a true no-op.
    """
    updates = []
    for name, t in params.parameters():
        if t.grad is None:
            continue
        if not np.all(np.isfinite(t.grad)):
            log.warning("non-finite gradient for %s; optimizer step skipped", name)
            return False
        updates.append((name, t))

    t_buf = params.buffer("adam.t")
    t_buf[...] = t_buf + 1
    step = int(t_buf)
    bc1 = 1.0 - cfg.beta1 ** step
    bc2 = 1.0 - cfg.beta2 ** step
    for name, p in updates:
        g = p.grad
        m = params.buffer(f"adam.m.{name}")
        v = params.buffer(f"adam.v.{name}")
        m[...] = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v[...] = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return True
