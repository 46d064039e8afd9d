"""Reverse-mode automatic differentiation over dense numpy arrays.

A ``Tensor`` wraps a float64 ndarray plus the bookkeeping needed to run
backpropagation: parent tensors and a closure that routes the output
gradient to them.  Graphs are built eagerly by the arithmetic below and
torn down by the garbage collector once the caller drops its references.

Values are row-major float64 throughout; 32-bit storage only appears at
serialization boundaries.  Nothing here touches a global RNG.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ShapeError

Array = np.ndarray


def _as_array(value) -> Array:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Reduce a broadcast gradient back to ``shape``."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _acc(t: "Tensor", g: Array) -> None:
    if t.requires_grad:
        t.grad = g if t.grad is None else t.grad + g


class Tensor:
    """Dense value with optional gradient tracking.

    ``data`` is always a float64 ndarray; after :meth:`backward`, ``grad``
    holds the accumulated gradient for every tensor that requires one.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = _as_array(data)
        self.grad: Array | None = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn: Callable[[Array], None] | None = None

    @staticmethod
    def _from_op(data: Array, parents: Sequence["Tensor"],
                 backward: Callable[[Array], None]) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out.name = None
        needs = any(p.requires_grad for p in parents)
        out.requires_grad = needs
        if needs:
            out._parents = tuple(parents)
            out._backward_fn = backward
        else:
            out._parents = ()
            out._backward_fn = None
        return out

    # -- basic protocol ------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # -- autodiff --------------------------------------------------------------

    def backward(self, grad: Array | None = None) -> None:
        """Backpropagate from this tensor through the recorded graph."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(
                    f"backward() without an explicit gradient needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.data)
        else:
            grad = _as_array(grad)

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen and parent.requires_grad:
                    stack.append((parent, False))

        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(order):
            if node._backward_fn is not None and node.grad is not None:
                node._backward_fn(node.grad)

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out_data = self.data + other.data

        def backward(g: Array) -> None:
            _acc(self, _unbroadcast(g, self.shape))
            _acc(other, _unbroadcast(g, other.shape))

        return Tensor._from_op(out_data, (self, other), backward)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_tensor(other)
        out_data = self.data - other.data

        def backward(g: Array) -> None:
            _acc(self, _unbroadcast(g, self.shape))
            _acc(other, _unbroadcast(-g, other.shape))

        return Tensor._from_op(out_data, (self, other), backward)

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __mul__(self, other):
        other = as_tensor(other)
        out_data = self.data * other.data

        def backward(g: Array) -> None:
            _acc(self, _unbroadcast(g * other.data, self.shape))
            _acc(other, _unbroadcast(g * self.data, other.shape))

        return Tensor._from_op(out_data, (self, other), backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        out_data = self.data / other.data

        def backward(g: Array) -> None:
            _acc(self, _unbroadcast(g / other.data, self.shape))
            _acc(other, _unbroadcast(-g * self.data / (other.data * other.data), other.shape))

        return Tensor._from_op(out_data, (self, other), backward)

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __neg__(self):
        def backward(g: Array) -> None:
            _acc(self, -g)

        return Tensor._from_op(-self.data, (self,), backward)

    def __pow__(self, exponent: float):
        c = float(exponent)
        out_data = self.data ** c

        def backward(g: Array) -> None:
            _acc(self, g * c * self.data ** (c - 1.0))

        return Tensor._from_op(out_data, (self,), backward)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        out_data = self.data[index]

        def backward(g: Array) -> None:
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            _acc(self, full)

        return Tensor._from_op(out_data, (self,), backward)

    # -- shape ops ---------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out_data = self.data.reshape(shape)
        src_shape = self.shape

        def backward(g: Array) -> None:
            _acc(self, g.reshape(src_shape))

        return Tensor._from_op(out_data, (self,), backward)

    def transpose(self, axes: Sequence[int] | None = None):
        out_data = self.data.transpose(axes)
        inverse = None if axes is None else np.argsort(axes)

        def backward(g: Array) -> None:
            _acc(self, g.transpose(inverse))

        return Tensor._from_op(out_data, (self,), backward)

    def swapaxes(self, a: int, b: int):
        out_data = self.data.swapaxes(a, b)

        def backward(g: Array) -> None:
            _acc(self, g.swapaxes(a, b))

        return Tensor._from_op(out_data, (self,), backward)

    @property
    def T(self):
        return self.transpose()

    # -- reductions ---------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)
        src_shape = self.shape

        def backward(g: Array) -> None:
            gg = g
            if axis is not None and not keepdims:
                gg = np.expand_dims(gg, axis)
            _acc(self, np.broadcast_to(gg, src_shape).copy())

        return Tensor._from_op(out_data, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            count = self.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = 1
            for a in axes:
                count *= self.shape[a]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(count))


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def param(data, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


# -- free functions -------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with batched leading dimensions."""
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim == 0 or b.ndim == 0:
        raise ShapeError(f"matmul needs ndim >= 1 operands, got {a.shape} and {b.shape}")
    inner_b = b.shape[-2] if b.ndim > 1 else b.shape[0]
    if a.shape[-1] != inner_b:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    out_data = np.matmul(a.data, b.data)

    def backward(g: Array) -> None:
        if b.ndim == 1 and a.ndim == 1:
            _acc(a, g * b.data)
            _acc(b, g * a.data)
            return
        if b.ndim == 1:
            _acc(a, _unbroadcast(g[..., None] * b.data, a.shape))
            _acc(b, _unbroadcast((a.data * g[..., None]).reshape(-1, a.shape[-1]).sum(axis=0), b.shape))
            return
        if a.ndim == 1:
            _acc(a, _unbroadcast(np.matmul(g[..., None, :], b.data.swapaxes(-1, -2))[..., 0, :], a.shape))
            _acc(b, _unbroadcast(a.data[:, None] * g[..., None, :], b.shape))
            return
        _acc(a, _unbroadcast(np.matmul(g, b.data.swapaxes(-1, -2)), a.shape))
        _acc(b, _unbroadcast(np.matmul(a.data.swapaxes(-1, -2), g), b.shape))

    return Tensor._from_op(out_data, (a, b), backward)


def exp(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out_data = np.exp(x.data)

    def backward(g: Array) -> None:
        _acc(x, g * out_data)

    return Tensor._from_op(out_data, (x,), backward)


def log(x: Tensor) -> Tensor:
    x = as_tensor(x)

    def backward(g: Array) -> None:
        _acc(x, g / x.data)

    return Tensor._from_op(np.log(x.data), (x,), backward)


def sqrt(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out_data = np.sqrt(x.data)

    def backward(g: Array) -> None:
        _acc(x, g * 0.5 / out_data)

    return Tensor._from_op(out_data, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out_data = np.tanh(x.data)

    def backward(g: Array) -> None:
        _acc(x, g * (1.0 - out_data * out_data))

    return Tensor._from_op(out_data, (x,), backward)


def _sigmoid_raw(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out_data = _sigmoid_raw(x.data)

    def backward(g: Array) -> None:
        _acc(x, g * out_data * (1.0 - out_data))

    return Tensor._from_op(out_data, (x,), backward)


_GELU_C = float(np.sqrt(2.0 / np.pi))


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit (tanh approximation)."""
    x = as_tensor(x)
    inner = np.tanh(_GELU_C * (x.data + 0.044715 * x.data ** 3))
    out_data = 0.5 * x.data * (1.0 + inner)

    def backward(g: Array) -> None:
        d_inner = (1.0 - inner * inner) * _GELU_C * (1.0 + 3 * 0.044715 * x.data ** 2)
        _acc(x, g * (0.5 * (1.0 + inner) + 0.5 * x.data * d_inner))

    return Tensor._from_op(out_data, (x,), backward)


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clip to [lo, hi]; gradient passes through the closed interval."""
    x = as_tensor(x)
    out_data = np.clip(x.data, lo, hi)
    mask = (x.data >= lo) & (x.data <= hi)

    def backward(g: Array) -> None:
        _acc(x, g * mask)

    return Tensor._from_op(out_data, (x,), backward)


def where(mask, a, b) -> Tensor:
    """Select ``a`` where the constant boolean ``mask`` holds, else ``b``."""
    mask = np.asarray(mask, dtype=bool)
    a = as_tensor(a)
    b = as_tensor(b)
    out_data = np.where(mask, a.data, b.data)

    def backward(g: Array) -> None:
        _acc(a, _unbroadcast(np.where(mask, g, 0.0), a.shape))
        _acc(b, _unbroadcast(np.where(mask, 0.0, g), b.shape))

    return Tensor._from_op(out_data, (a, b), backward)


def concat(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in ts], axis=axis)
    sizes = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def backward(g: Array) -> None:
        for t, piece in zip(ts, np.split(g, sizes, axis=axis)):
            _acc(t, piece)

    return Tensor._from_op(out_data, tuple(ts), backward)


def stack(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    out_data = np.stack([t.data for t in ts], axis=axis)

    def backward(g: Array) -> None:
        for i, t in enumerate(ts):
            _acc(t, np.take(g, i, axis=axis))

    return Tensor._from_op(out_data, tuple(ts), backward)


def take(x: Tensor, indices, axis: int = 0) -> Tensor:
    """Gather along ``axis``; backward scatters with accumulation."""
    x = as_tensor(x)
    indices = np.asarray(indices)
    out_data = np.take(x.data, indices, axis=axis)

    def backward(g: Array) -> None:
        full = np.zeros_like(x.data)
        moved = np.moveaxis(full, axis, 0)
        np.add.at(moved, indices, np.moveaxis(g, axis, 0) if axis != 0 else g)
        _acc(x, full)

    return Tensor._from_op(out_data, (x,), backward)


def cumprod(x: Tensor, axis: int = 0) -> Tensor:
    """Cumulative product along ``axis``.

    Backward uses the division form, so inputs must stay bounded away from
    zero (compositing keeps 1 - alpha >= 1e-3 by clamping).
    """
    x = as_tensor(x)
    out_data = np.cumprod(x.data, axis=axis)

    def backward(g: Array) -> None:
        gy = g * out_data
        rev = np.flip(np.cumsum(np.flip(gy, axis=axis), axis=axis), axis=axis)
        _acc(x, rev / x.data)

    return Tensor._from_op(out_data, (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shift = x - x.data.max(axis=axis, keepdims=True)
    e = exp(shift)
    return e / e.sum(axis=axis, keepdims=True)


def layer_norm(x: Tensor, axis: int = -1, eps: float = 1e-6) -> Tensor:
    """Non-affine layer normalization."""
    m = x.mean(axis=axis, keepdims=True)
    centered = x - m
    var = (centered * centered).mean(axis=axis, keepdims=True)
    return centered / sqrt(var + eps)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map with weight stored as (d_out, d_in)."""
    y = matmul(x, weight.T)
    if bias is not None:
        y = y + bias
    return y
