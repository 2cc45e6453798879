"""Layer-level building blocks on top of the tensor engine.

Everything here is functional: weights come in as tensors, state (like
batchnorm running statistics) lives in plain numpy buffers owned by the
caller.  Convolutions and max pooling get dedicated backward closures
because composing them from primitives would be painfully slow; the
recurrent cells and highway layers are plain compositions.
"""

from __future__ import annotations

import numpy as np

from .rng import Rng, sample_uniform
from .tensor import ShapeError, Tensor, _node, concat


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = x.matmul(weight)
    if bias is not None:
        out = out + bias
    return out


def embedding(ids: np.ndarray, table: Tensor) -> Tensor:
    """Gather rows of `table` (V, D) at integer positions `ids` (any shape)."""
    ids = np.asarray(ids)
    if not np.issubdtype(ids.dtype, np.integer):
        raise TypeError(f"embedding ids must be integers, got {ids.dtype}")
    out = _node(table.data[ids], (table,), "embedding")
    if out.requires_grad:
        def _bw():
            buf = np.zeros_like(table.data)
            np.add.at(buf, ids.reshape(-1), out.grad.reshape(-1, table.shape[1]))
            table._accum(buf)
        out._backward = _bw
    return out


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    val = e / e.sum(axis=axis, keepdims=True)
    out = _node(val, (x,), "softmax")
    if out.requires_grad:
        def _bw():
            g = out.grad
            inner = (g * val).sum(axis=axis, keepdims=True)
            x._accum(val * (g - inner))
        out._backward = _bw
    return out


def logsumexp(x: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    m = x.data.max(axis=axis, keepdims=True)
    e = np.exp(x.data - m)
    s = e.sum(axis=axis, keepdims=True)
    val = m + np.log(s)
    if not keepdims:
        val = np.squeeze(val, axis=axis)
    out = _node(val, (x,), "logsumexp")
    if out.requires_grad:
        soft = e / s
        def _bw():
            g = out.grad
            if not keepdims:
                g = np.expand_dims(g, axis)
            x._accum(soft * g)
        out._backward = _bw
    return out


def dropout(x: Tensor, p: float, rng: Rng, training: bool) -> Tensor:
    """Inverted dropout: active units are scaled by 1/(1-p) during training."""
    if not training or p <= 0.0:
        return x
    keep = (rng.uniform(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return x * Tensor(keep)


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    momentum: float = 0.1,
    eps: float = 1e-5,
    training: bool = True,
) -> Tensor:
    """Normalize (N, C) activations per channel.

    In training mode the batch statistics are used and the running
    buffers are updated in place; in inference mode the op reduces to a
    fixed affine map using the stored statistics.
    """
    if x.ndim != 2:
        raise ShapeError(f"batchnorm expects (N, C), got {x.shape}; reshape first")
    if training:
        if x.shape[0] < 2:
            raise ValueError(f"batchnorm needs at least 2 rows in training mode, got {x.shape[0]}")
        mean = x.mean(axis=0)
        centered = x - mean
        var = centered.square().mean(axis=0)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean.data.astype(running_mean.dtype)
        running_var *= 1.0 - momentum
        running_var += momentum * var.data.astype(running_var.dtype)
        xhat = centered / (var + eps).sqrt()
    else:
        scale = 1.0 / np.sqrt(running_var + eps)
        xhat = (x - Tensor(running_mean.astype(x.data.dtype))) * Tensor(scale.astype(x.data.dtype))
    return xhat * gamma + beta


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None, stride: int = 1, padding: int = 0) -> Tensor:
    """1-d convolution over (B, T, Cin) with kernel (K, Cin, Cout)."""
    xd, wd = x.data, weight.data
    if xd.ndim != 3 or wd.ndim != 3 or xd.shape[2] != wd.shape[1]:
        raise ShapeError(f"conv1d: input {xd.shape} with kernel {wd.shape}")
    k = wd.shape[0]
    xp = np.pad(xd, ((0, 0), (padding, padding), (0, 0))) if padding else xd
    if xp.shape[1] < k:
        raise ShapeError(f"conv1d: padded length {xp.shape[1]} shorter than kernel {k}")
    windows = np.lib.stride_tricks.sliding_window_view(xp, k, axis=1)[:, ::stride]
    val = np.einsum("btck,kco->bto", windows, wd, optimize=True)
    if bias is not None:
        val += bias.data
    parents = (x, weight) if bias is None else (x, weight, bias)
    out = _node(val.astype(xd.dtype, copy=False), parents, "conv1d")
    if out.requires_grad:
        t_out = val.shape[1]
        def _bw():
            g = out.grad
            if weight.requires_grad:
                weight._accum(np.einsum("btck,bto->kco", windows, g, optimize=True).astype(wd.dtype, copy=False))
            if bias is not None and bias.requires_grad:
                bias._accum(g.sum(axis=(0, 1)))
            if x.requires_grad:
                dxp = np.zeros_like(xp)
                pos = stride * np.arange(t_out)
                for j in range(k):
                    dxp[:, pos + j, :] += np.einsum("bto,co->btc", g, wd[j], optimize=True)
                x._accum(dxp[:, padding: xp.shape[1] - padding, :] if padding else dxp)
        out._backward = _bw
    return out


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None,
    stride: tuple[int, int] = (1, 1),
    padding: tuple[int, int] = (0, 0),
) -> Tensor:
    """2-d convolution over (B, H, W, Cin) with kernel (KH, KW, Cin, Cout)."""
    xd, wd = x.data, weight.data
    if xd.ndim != 4 or wd.ndim != 4 or xd.shape[3] != wd.shape[2]:
        raise ShapeError(f"conv2d: input {xd.shape} with kernel {wd.shape}")
    kh, kw = wd.shape[:2]
    sh, sw = stride
    ph, pw = padding
    xp = np.pad(xd, ((0, 0), (ph, ph), (pw, pw), (0, 0))) if (ph or pw) else xd
    if xp.shape[1] < kh or xp.shape[2] < kw:
        raise ShapeError(f"conv2d: padded input {xp.shape} smaller than kernel {wd.shape}")
    windows = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::sh, :: sw]
    val = np.einsum("bhwcij,ijco->bhwo", windows, wd, optimize=True)
    if bias is not None:
        val += bias.data
    parents = (x, weight) if bias is None else (x, weight, bias)
    out = _node(val.astype(xd.dtype, copy=False), parents, "conv2d")
    if out.requires_grad:
        h_out, w_out = val.shape[1], val.shape[2]
        def _bw():
            g = out.grad
            if weight.requires_grad:
                weight._accum(np.einsum("bhwcij,bhwo->ijco", windows, g, optimize=True).astype(wd.dtype, copy=False))
            if bias is not None and bias.requires_grad:
                bias._accum(g.sum(axis=(0, 1, 2)))
            if x.requires_grad:
                dxp = np.zeros_like(xp)
                rows = sh * np.arange(h_out)
                cols = sw * np.arange(w_out)
                for i in range(kh):
                    for j in range(kw):
                        dxp[:, (rows + i)[:, None], cols + j, :] += np.einsum(
                            "bhwo,co->bhwc", g, wd[i, j], optimize=True
                        )
                x._accum(dxp[:, ph: xp.shape[1] - ph, pw: xp.shape[2] - pw, :])
        out._backward = _bw
    return out


def max_pool1d_same(x: Tensor, width: int) -> Tensor:
    """Stride-1 max pooling over time, output length equal to input length."""
    xd = x.data
    if xd.ndim != 3:
        raise ShapeError(f"max_pool1d_same expects (B, T, C), got {xd.shape}")
    left = (width - 1) // 2
    right = width - 1 - left
    xp = np.pad(xd, ((0, 0), (left, right), (0, 0)), constant_values=-np.inf)
    windows = np.lib.stride_tricks.sliding_window_view(xp, width, axis=1)
    arg = windows.argmax(axis=-1)
    val = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
    out = _node(np.ascontiguousarray(val), (x,), "max_pool1d")
    if out.requires_grad:
        b_n, t_n, c_n = xd.shape
        def _bw():
            dxp = np.zeros_like(xp)
            bi, ti, ci = np.meshgrid(
                np.arange(b_n), np.arange(t_n), np.arange(c_n), indexing="ij"
            )
            np.add.at(dxp, (bi, ti + arg, ci), out.grad)
            x._accum(dxp[:, left: left + t_n, :])
        out._backward = _bw
    return out


def lstm_cell(
    x: Tensor, h: Tensor, c: Tensor, w_x: Tensor, w_h: Tensor, bias: Tensor
) -> tuple[Tensor, Tensor]:
    """One LSTM step; gate blocks are ordered input, forget, cell, output."""
    n = h.shape[-1]
    gates = x.matmul(w_x) + h.matmul(w_h) + bias
    i = gates[..., 0 * n: 1 * n].sigmoid()
    f = gates[..., 1 * n: 2 * n].sigmoid()
    g = gates[..., 2 * n: 3 * n].tanh()
    o = gates[..., 3 * n: 4 * n].sigmoid()
    c_new = f * c + i * g
    h_new = o * c_new.tanh()
    return h_new, c_new


def gru_cell(x: Tensor, h: Tensor, w_x: Tensor, w_h: Tensor, bias: Tensor) -> Tensor:
    """One GRU step; gate blocks are ordered update, reset, candidate."""
    n = h.shape[-1]
    xs = x.matmul(w_x) + bias
    hs = h.matmul(w_h)
    z = (xs[..., 0 * n: 1 * n] + hs[..., 0 * n: 1 * n]).sigmoid()
    r = (xs[..., 1 * n: 2 * n] + hs[..., 1 * n: 2 * n]).sigmoid()
    cand = (xs[..., 2 * n: 3 * n] + r * hs[..., 2 * n: 3 * n]).tanh()
    return z * h + (1.0 - z) * cand


def highway(x: Tensor, w_h: Tensor, b_h: Tensor, w_t: Tensor, b_t: Tensor) -> Tensor:
    """Highway layer: gate blends a relu transform with the identity path."""
    transform = linear(x, w_h, b_h).relu()
    gate = linear(x, w_t, b_t).sigmoid()
    return transform * gate + x * (1.0 - gate)


def one_hot(ids: np.ndarray, depth: int, dtype=np.float64) -> np.ndarray:
    ids = np.asarray(ids)
    out = np.zeros(ids.shape + (depth,), dtype=dtype)
    np.put_along_axis(out, ids[..., None].astype(np.int64), 1.0, axis=-1)
    return out
