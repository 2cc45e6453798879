"""Named parameter and buffer registry.

A `ParamStore` is a flat, ordered mapping from dotted names to trainable
tensors, plus a parallel mapping for non-trainable state (batchnorm
running statistics and the like).  Checkpointing and the optimizer both
key off these names, so creation order and naming must be deterministic:
build the model the same way and you get the same store.
"""

from __future__ import annotations

import numpy as np

from .rng import Rng
from .tensor import Tensor, get_default_dtype


class ParamStore:
    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._buffers: dict[str, np.ndarray] = {}

    # -- creation ------------------------------------------------------

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"parameter {name!r} already registered")
        t = Tensor(np.asarray(value, dtype=get_default_dtype()), requires_grad=True)
        self._params[name] = t
        return t

    def add_buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self._buffers:
            raise KeyError(f"buffer {name!r} already registered")
        arr = np.asarray(value, dtype=np.float64).copy()
        self._buffers[name] = arr
        return arr

    # -- access --------------------------------------------------------

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def buffer(self, name: str) -> np.ndarray:
        return self._buffers[name]

    def has_buffer(self, name: str) -> bool:
        return name in self._buffers

    def parameters(self) -> list[tuple[str, Tensor]]:
        return list(self._params.items())

    def buffers(self) -> list[tuple[str, np.ndarray]]:
        return list(self._buffers.items())

    def names(self) -> list[str]:
        return list(self._params)

    def count(self) -> int:
        return sum(t.size for t in self._params.values())

    # -- training helpers ---------------------------------------------

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def grads_finite(self) -> bool:
        for t in self._params.values():
            if t.grad is not None and not np.all(np.isfinite(t.grad)):
                return False
        return True

    # -- state transfer ------------------------------------------------

    def state_arrays(self) -> dict[str, np.ndarray]:
        """All values under stable names; params as-is, buffers prefixed."""
        out = {f"param.{k}": t.data for k, t in self._params.items()}
        out.update({f"buffer.{k}": v for k, v in self._buffers.items()})
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for k, t in self._params.items():
            src = arrays[f"param.{k}"]
            if src.shape != t.data.shape:
                raise ValueError(f"shape mismatch for {k}: stored {src.shape}, model {t.data.shape}")
            t.data = src.astype(t.data.dtype)
        for k in self._buffers:
            self._buffers[k][...] = arrays[f"buffer.{k}"]


# -- initializers -----------------------------------------------------


def fanin_uniform(rng: Rng, shape: tuple, fan_in: int | None = None) -> np.ndarray:
    """Uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)]; default fan_in is shape[0]."""
    if fan_in is None:
        fan_in = int(np.prod(shape[:-1]))
    lim = 1.0 / np.sqrt(max(fan_in, 1))
    return (rng.uniform(shape) * 2.0 - 1.0) * lim


def orthogonal(rng: Rng, shape: tuple[int, int]) -> np.ndarray:
    """Orthogonal matrix via QR of a normal draw, sign-fixed for determinism."""
    rows, cols = shape
    a = rng.normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return q[:rows, :cols].copy()


def lstm_bias(hidden: int, forget_value: float = 1.0) -> np.ndarray:
    """Zero bias with the forget-gate block set to `forget_value`."""
    b = np.zeros(4 * hidden)
    b[hidden: 2 * hidden] = forget_value
    return b
