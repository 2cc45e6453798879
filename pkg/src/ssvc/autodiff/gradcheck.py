"""Finite-difference verification of reverse-mode gradients.

Two modes: `entrywise` perturbs every element of every checked tensor
(thorough, only viable for small parameter sets), `directional` compares
the analytic directional derivative against a central difference along a
handful of random directions (cheap enough for whole models).  Both
demand float64 data; at float32 the difference quotient drowns in
rounding noise and the check would be meaningless.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .rng import Rng
from .tensor import Tensor


@dataclass
class GradCheckReport:
    mode: str
    max_rel_err: float
    entries: list[tuple[str, float]] = field(default_factory=list)

    def worst(self, k: int = 5) -> list[tuple[str, float]]:
        return sorted(self.entries, key=lambda e: -e[1])[:k]


def _require_f64(tensors: Sequence[tuple[str, Tensor]]) -> None:
    for name, t in tensors:
        if t.data.dtype != np.float64:
            raise TypeError(
                f"gradient checking requires float64 parameters, {name} is {t.data.dtype.name}; "
                "rebuild the model under default_dtype('float64')"
            )


def _rel_err(analytic: float, numeric: float, scale: float) -> float:
    denom = max(abs(analytic), abs(numeric), scale)
    return abs(analytic - numeric) / denom


def gradcheck_directional(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[tuple[str, Tensor]],
    rng: Rng,
    n_directions: int = 3,
    h: float = 1e-6,
    scale: float = 1e-8,
) -> GradCheckReport:
    """Compare analytic and central-difference directional derivatives.

    `loss_fn` must rebuild the graph from the current tensor values on
    every call.  Each direction perturbs all checked tensors jointly.
    """
    tensors = list(tensors)
    _require_f64(tensors)
    for _, t in tensors:
        t.grad = None
    loss = loss_fn()
    loss.backward()
    grads = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for _, t in tensors]

    entries = []
    for d in range(n_directions):
        dirs = [rng.normal(t.shape) for _, t in tensors]
        norm = np.sqrt(sum(float((v * v).sum()) for v in dirs))
        dirs = [v / norm for v in dirs]
        analytic = sum(float((g * v).sum()) for g, v in zip(grads, dirs))

        originals = [t.data.copy() for _, t in tensors]
        for (_, t), v in zip(tensors, dirs):
            t.data = t.data + h * v
        f_plus = float(loss_fn().data)
        for (_, t), orig, v in zip(tensors, originals, dirs):
            t.data = orig - h * v
        f_minus = float(loss_fn().data)
        for (_, t), orig in zip(tensors, originals):
            t.data = orig

        numeric = (f_plus - f_minus) / (2.0 * h)
        entries.append((f"direction[{d}]", _rel_err(analytic, numeric, scale)))

    return GradCheckReport("directional", max(e[1] for e in entries), entries)


def gradcheck_entrywise(
    loss_fn: Callable[[], Tensor],
    tensors: Sequence[tuple[str, Tensor]],
    h: float = 1e-6,
    scale: float = 1e-8,
    max_entries_per_tensor: int | None = None,
    rng: Rng | None = None,
) -> GradCheckReport:
    """Central-difference check of individual elements.

    With `max_entries_per_tensor` set, a deterministic subsample of the
    positions is checked instead of every element (needs `rng`).
    """
    tensors = list(tensors)
    _require_f64(tensors)
    for _, t in tensors:
        t.grad = None
    loss = loss_fn()
    loss.backward()
    grads = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for _, t in tensors]

    entries = []
    for (name, t), g in zip(tensors, grads):
        flat = t.data.reshape(-1)
        n = flat.size
        if max_entries_per_tensor is not None and n > max_entries_per_tensor:
            if rng is None:
                raise ValueError("subsampling requires an rng")
            idx = rng.permutation(n)[:max_entries_per_tensor]
        else:
            idx = np.arange(n)
        gflat = g.reshape(-1)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(loss_fn().data)
            flat[i] = orig - h
            f_minus = float(loss_fn().data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            entries.append((f"{name}[{i}]", _rel_err(float(gflat[i]), numeric, scale)))

    return GradCheckReport("entrywise", max(e[1] for e in entries), entries)
