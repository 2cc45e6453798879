"""Reverse-mode automatic differentiation over numpy arrays.

A `Tensor` wraps an ndarray together with a gradient slot and a closure
that knows how to push gradients to its parents.  Calling `backward()`
on a scalar tensor topologically sorts the graph that produced it and
runs the closures in reverse.  The graph is rebuilt on every forward
pass, so control flow in plain Python (loops, ifs) just works.

Broadcasting is deliberately restricted: two operands may combine only
when their shapes are equal, one of them is a scalar, or the smaller
shape equals the trailing suffix of the larger one.  Everything else
raises `ShapeError` naming the op and both shapes.  This catches the
silent outer-product bugs that full numpy broadcasting invites, at the
cost of an occasional explicit `repeat_last`.

Default element type is float32; `default_dtype("float64")` switches a
whole block (gradient checking requires float64).
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Iterable, Sequence

import numpy as np

_DEFAULT_DTYPE = np.dtype(np.float32)
_GRAD_ENABLED = True


class ShapeError(ValueError):
    """Raised when an op receives shapes outside the supported patterns."""


def get_default_dtype() -> np.dtype:
    return _DEFAULT_DTYPE


def set_default_dtype(dtype) -> None:
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported default dtype {dtype}")
    _DEFAULT_DTYPE = dtype


@contextmanager
def default_dtype(dtype):
    """Temporarily switch the default element type (float32/float64)."""
    old = _DEFAULT_DTYPE
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(old)


@contextmanager
def no_grad():
    """Disable graph construction inside the block (synthesis, evaluation)."""
    global _GRAD_ENABLED
    old = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = old


def _suffix_match(big: tuple, small: tuple) -> bool:
    return len(big) > len(small) and big[len(big) - len(small):] == small


def check_broadcast(op: str, a_shape: tuple, b_shape: tuple) -> None:
    """Validate the restricted broadcasting rule, raising ShapeError otherwise."""
    if a_shape == b_shape:
        return
    if a_shape == () or b_shape == ():
        return
    if _suffix_match(a_shape, b_shape) or _suffix_match(b_shape, a_shape):
        return
    raise ShapeError(
        f"{op}: shapes {a_shape} and {b_shape} do not combine; "
        "allowed: equal shapes, a scalar operand, or one shape equal to "
        "the trailing suffix of the other"
    )


def reduce_to_shape(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    if shape == ():
        return np.asarray(grad.sum(), dtype=grad.dtype)
    extra = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(extra)))


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_backward", "_prev", "_op")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            raise TypeError("wrapping a Tensor in a Tensor; use .detach() or the value directly")
        if dtype is not None:
            arr = np.asarray(data, dtype=dtype)
        elif isinstance(data, np.ndarray) and data.dtype in (np.dtype(np.float32), np.dtype(np.float64)):
            arr = data
        else:
            arr = np.asarray(data, dtype=_DEFAULT_DTYPE)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._backward = None
        self._prev: tuple = ()
        self._op = ""

    # -- bookkeeping ---------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _scalar_err(self)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}{flag}, op={self._op or 'leaf'})"

    def zero_grad(self) -> None:
        self.grad = None

    # -- graph construction -------------------------------------------

    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError(f"backward() needs a scalar, got shape {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._prev:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        other = _coerce(other, self.data.dtype)
        check_broadcast("add", self.shape, other.shape)
        out = _node(self.data + other.data, (self, other), "add")
        if out.requires_grad:
            def _bw():
                out_grad = out.grad
                if self.requires_grad:
                    self._accum(reduce_to_shape(out_grad, self.shape))
                if other.requires_grad:
                    other._accum(reduce_to_shape(out_grad, other.shape))
            out._backward = _bw
        return out

    def __mul__(self, other):
        other = _coerce(other, self.data.dtype)
        check_broadcast("mul", self.shape, other.shape)
        out = _node(self.data * other.data, (self, other), "mul")
        if out.requires_grad:
            def _bw():
                if self.requires_grad:
                    self._accum(reduce_to_shape(out.grad * other.data, self.shape))
                if other.requires_grad:
                    other._accum(reduce_to_shape(out.grad * self.data, other.shape))
            out._backward = _bw
        return out

    def __sub__(self, other):
        other = _coerce(other, self.data.dtype)
        check_broadcast("sub", self.shape, other.shape)
        out = _node(self.data - other.data, (self, other), "sub")
        if out.requires_grad:
            def _bw():
                if self.requires_grad:
                    self._accum(reduce_to_shape(out.grad, self.shape))
                if other.requires_grad:
                    other._accum(reduce_to_shape(-out.grad, other.shape))
            out._backward = _bw
        return out

    def __truediv__(self, other):
        other = _coerce(other, self.data.dtype)
        check_broadcast("div", self.shape, other.shape)
        out = _node(self.data / other.data, (self, other), "div")
        if out.requires_grad:
            def _bw():
                if self.requires_grad:
                    self._accum(reduce_to_shape(out.grad / other.data, self.shape))
                if other.requires_grad:
                    other._accum(reduce_to_shape(-out.grad * self.data / (other.data * other.data), other.shape))
            out._backward = _bw
        return out

    def __neg__(self):
        out = _node(-self.data, (self,), "neg")
        if out.requires_grad:
            def _bw():
                self._accum(-out.grad)
            out._backward = _bw
        return out

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("only scalar exponents are supported")
        out = _node(self.data ** p, (self,), "pow")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * p * self.data ** (p - 1))
            out._backward = _bw
        return out

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return _coerce(other, self.data.dtype) - self

    def __rtruediv__(self, other):
        return _coerce(other, self.data.dtype) / self

    # -- elementwise functions ----------------------------------------

    def exp(self):
        out = _node(np.exp(self.data), (self,), "exp")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * out.data)
            out._backward = _bw
        return out

    def log(self):
        out = _node(np.log(self.data), (self,), "log")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad / self.data)
            out._backward = _bw
        return out

    def tanh(self):
        out = _node(np.tanh(self.data), (self,), "tanh")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * (1.0 - out.data * out.data))
            out._backward = _bw
        return out

    def sigmoid(self):
        x = self.data
        val = np.empty_like(x)
        pos = x >= 0
        val[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        val[~pos] = ex / (1.0 + ex)
        out = _node(val, (self,), "sigmoid")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * out.data * (1.0 - out.data))
            out._backward = _bw
        return out

    def relu(self):
        out = _node(np.maximum(self.data, 0.0), (self,), "relu")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * (self.data > 0))
            out._backward = _bw
        return out

    def softplus(self):
        x = self.data
        # log(1 + e^x) = max(x, 0) + log1p(e^-|x|), stable for large |x|
        val = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
        out = _node(val, (self,), "softplus")
        if out.requires_grad:
            def _bw():
                sig = np.empty_like(x)
                pos = x >= 0
                sig[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
                ex = np.exp(x[~pos])
                sig[~pos] = ex / (1.0 + ex)
                self._accum(out.grad * sig)
            out._backward = _bw
        return out

    def abs(self):
        out = _node(np.abs(self.data), (self,), "abs")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * np.sign(self.data))
            out._backward = _bw
        return out

    def sqrt(self):
        out = _node(np.sqrt(self.data), (self,), "sqrt")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * 0.5 / out.data)
            out._backward = _bw
        return out

    def square(self):
        out = _node(self.data * self.data, (self,), "square")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad * 2.0 * self.data)
            out._backward = _bw
        return out

    def clip(self, lo=None, hi=None):
        """Clamp values; gradient flows only where the input was in range."""
        out = _node(np.clip(self.data, lo, hi), (self,), "clip")
        if out.requires_grad:
            def _bw():
                mask = np.ones_like(self.data)
                if lo is not None:
                    mask *= self.data >= lo
                if hi is not None:
                    mask *= self.data <= hi
                self._accum(out.grad * mask)
            out._backward = _bw
        return out

    # -- reductions ----------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = _node(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum")
        if out.requires_grad:
            def _bw():
                g = out.grad
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                self._accum(np.broadcast_to(g, self.shape))
            out._backward = _bw
        return out

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else _axis_size(self.shape, axis)
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # -- linear algebra ------------------------------------------------

    def matmul(self, other):
        other = _coerce(other, self.data.dtype)
        a, b = self.data, other.data
        if a.ndim == 2 and b.ndim == 2:
            ok = a.shape[1] == b.shape[0]
        elif a.ndim == 3 and b.ndim == 2:
            ok = a.shape[2] == b.shape[0]
        elif a.ndim == 3 and b.ndim == 3:
            ok = a.shape[0] == b.shape[0] and a.shape[2] == b.shape[1]
        else:
            ok = False
        if not ok:
            raise ShapeError(
                f"matmul: shapes {a.shape} and {b.shape} not supported; "
                "use (n,m)x(m,p), (B,n,m)x(m,p) or (B,n,m)x(B,m,p)"
            )
        out = _node(a @ b, (self, other), "matmul")
        if out.requires_grad:
            def _bw():
                g = out.grad
                if self.requires_grad:
                    self._accum(g @ np.swapaxes(b, -1, -2))
                if other.requires_grad:
                    if a.ndim == 3 and b.ndim == 2:
                        gb = np.einsum("btn,btp->np", a, g)
                    else:
                        gb = np.swapaxes(a, -1, -2) @ g
                    other._accum(gb.astype(b.dtype, copy=False))
            out._backward = _bw
        return out

    __matmul__ = matmul

    # -- shape manipulation -------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = _node(self.data.reshape(shape), (self,), "reshape")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad.reshape(self.shape))
            out._backward = _bw
        return out

    def transpose(self, axes: Sequence[int] | None = None):
        out = _node(np.transpose(self.data, axes), (self,), "transpose")
        if out.requires_grad:
            inverse = None if axes is None else np.argsort(axes)
            def _bw():
                self._accum(np.transpose(out.grad, inverse))
            out._backward = _bw
        return out

    def repeat_last(self, n: int):
        """Append a trailing axis of length n by repetition: (...,) -> (..., n)."""
        out = _node(np.repeat(self.data[..., None], n, axis=-1), (self,), "repeat_last")
        if out.requires_grad:
            def _bw():
                self._accum(out.grad.sum(axis=-1))
            out._backward = _bw
        return out

    def __getitem__(self, idx):
        _check_basic_index(idx)
        out = _node(self.data[idx], (self,), "slice")
        if out.requires_grad:
            def _bw():
                buf = np.zeros_like(self.data)
                buf[idx] += out.grad
                self._accum(buf)
            out._backward = _bw
        return out


def _scalar_err(t: Tensor):
    raise ValueError(f"item() needs a single element, got shape {t.shape}")


def _check_basic_index(idx) -> None:
    parts = idx if isinstance(idx, tuple) else (idx,)
    for p in parts:
        if not isinstance(p, (int, np.integer, slice, type(Ellipsis), type(None))):
            raise TypeError(
                "only basic indexing (ints, slices, ellipsis) is differentiable; "
                "use embedding lookup for integer-array gathers"
            )


def _axis_size(shape: tuple, axis) -> int:
    if isinstance(axis, int):
        axis = (axis,)
    n = 1
    for a in axis:
        n *= shape[a]
    return n


def _node(data: np.ndarray, parents: tuple, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._op = op
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._prev = parents
    else:
        out.requires_grad = False
        out._prev = ()
    out._backward = None
    return out


def _coerce(value, dtype) -> Tensor:
    if isinstance(value, Tensor):
        if value.data.dtype != dtype:
            raise TypeError(
                f"mixed element types {value.data.dtype.name} and {np.dtype(dtype).name}; "
                "keep one precision per graph"
            )
        return value
    return Tensor(np.asarray(value, dtype=dtype))


def as_tensor(value, requires_grad: bool = False) -> Tensor:
    """Wrap arrays or numbers in a Tensor at the current default dtype."""
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=_DEFAULT_DTYPE), requires_grad=requires_grad)


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ValueError("concat of an empty list")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    out = _node(data, tuple(tensors), "concat")
    if out.requires_grad:
        sizes = [t.shape[axis] for t in tensors]
        offsets = np.cumsum([0] + sizes)
        def _bw():
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                if t.requires_grad:
                    sl = [slice(None)] * out.grad.ndim
                    sl[axis] = slice(lo, hi)
                    t._accum(out.grad[tuple(sl)])
        out._backward = _bw
    return out


def stack(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    tensors = list(tensors)
    expanded = []
    for t in tensors:
        shape = list(t.shape)
        shape.insert(axis if axis >= 0 else axis + t.ndim + 1, 1)
        expanded.append(t.reshape(shape))
    return concat(expanded, axis=axis)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape, dtype=_DEFAULT_DTYPE), requires_grad=requires_grad)


def ones(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape, dtype=_DEFAULT_DTYPE), requires_grad=requires_grad)
