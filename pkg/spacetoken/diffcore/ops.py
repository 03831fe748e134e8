"""
Differentiable forward operations.

Broadcasting is deliberately narrow: the smaller operand's shape must equal the
trailing axes of the larger one (scalars included), and gradients are reduced
over the leading axes only.
"""

import math
from collections.abc import Sequence
from typing import Any

import numpy as np

from spacetoken.diffcore.tensor import ShapeError, Tensor, as_tensor, grad_enabled

IGNORE_INDEX = -100
GELU_C = math.sqrt(2.0 / math.pi)


def _result(
    data: np.ndarray, parents: tuple[Tensor, ...], backward_fn: Any, op: str
) -> Tensor:
    requires_grad = grad_enabled() and any(p.requires_grad for p in parents)
    return Tensor(
        data, requires_grad=requires_grad, parents=parents, backward_fn=backward_fn, op=op
    )


def _broadcast_shape(a: tuple[int, ...], b: tuple[int, ...], op: str) -> tuple[int, ...]:
    big, small = (a, b) if len(a) >= len(b) else (b, a)
    if small and big[len(big) - len(small) :] != small:
        raise ShapeError(f"{op}: shapes {a} and {b} only broadcast over leading axes")
    return big


def _reduce_to(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    return grad


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape, "add")

    def backward(g: np.ndarray):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return _result(a.data + b.data, (a, b), backward, "add")


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape, "sub")

    def backward(g: np.ndarray):
        return _reduce_to(g, a.shape), -_reduce_to(g, b.shape)

    return _result(a.data - b.data, (a, b), backward, "sub")


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a.shape, b.shape, "mul")

    def backward(g: np.ndarray):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return _result(a.data * b.data, (a, b), backward, "mul")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a [..., m, k] or [k] times b [k, n] or [..., k, n] with matching leading axes."""
    if a.ndim < 1 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    if b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul: leading axes of {a.shape} and {b.shape} differ")

    def backward(g: np.ndarray):
        grad_a = g @ np.swapaxes(b.data, -1, -2)
        if a.ndim == 1:
            grad_b = np.outer(a.data, g)
        else:
            grad_b = _reduce_to(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return grad_a, grad_b

    return _result(a.data @ b.data, (a, b), backward, "matmul")


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def gelu(x: Tensor) -> Tensor:
    """Tanh approximation of GELU; smooth with a bounded derivative."""
    u = x.data
    t = np.tanh(GELU_C * (u + 0.044715 * u**3))
    y = 0.5 * u * (1.0 + t)

    def backward(g: np.ndarray):
        du = GELU_C * (1.0 + 3.0 * 0.044715 * u * u)
        return (g * (0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * du),)

    return _result(y, (x,), backward, "gelu")


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _result(y, (x,), lambda g: (g * y,), "exp")


def absolute(x: Tensor) -> Tensor:
    return _result(np.abs(x.data), (x,), lambda g: (g * np.sign(x.data),), "abs")


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    inside = (x.data >= lo) & (x.data <= hi)
    return _result(np.clip(x.data, lo, hi), (x,), lambda g: (g * inside,), "clip")


def softmax(x: Tensor) -> Tensor:
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _result(y, (x,), backward, "softmax")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    width = x.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise ShapeError(f"layer_norm: input {x.shape} vs gain {gamma.shape} / bias {beta.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std

    def backward(g: np.ndarray):
        dxhat = g * gamma.data
        dx = inv_std * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        lead = tuple(range(g.ndim - 1))
        return dx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _result(xhat * gamma.data + beta.data, (x, gamma, beta), backward, "layer_norm")


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError(f"embedding: table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(f"embedding: ids out of range for table {table.shape}")

    def backward(g: np.ndarray):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids, g)
        return (grad,)

    return _result(table.data[ids], (table,), backward, "embedding")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat: nothing to concatenate")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or t.shape[:axis] + t.shape[axis + 1 :] != (
            tensors[0].shape[:axis] + tensors[0].shape[axis + 1 :]
        ):
            raise ShapeError(f"concat: shapes {tensors[0].shape} and {t.shape} differ off-axis")
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return _result(
        np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward, "concat"
    )


def index(x: Tensor, key: Any) -> Tensor:
    """Slicing / integer indexing along any axes."""

    def backward(g: np.ndarray):
        grad = np.zeros_like(x.data)
        np.add.at(grad, key, g)
        return (grad,)

    return _result(x.data[key], (x,), backward, "index")


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        y = x.data.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"reshape: cannot view {x.shape} as {tuple(shape)}")
    return _result(y, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _result(
        np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),), "transpose"
    )


def rotate_half(x: Tensor) -> Tensor:
    """[x1, x2] -> [-x2, x1] on the last axis (rotary pairing)."""
    half = x.shape[-1] // 2
    if x.shape[-1] % 2:
        raise ShapeError(f"rotate_half: last axis of {x.shape} must be even")
    x1, x2 = x.data[..., :half], x.data[..., half:]

    def backward(g: np.ndarray):
        return (np.concatenate([g[..., half:], -g[..., :half]], axis=-1),)

    return _result(np.concatenate([-x2, x1], axis=-1), (x,), backward, "rotate_half")


def sum_all(x: Tensor) -> Tensor:
    return _result(x.data.sum(), (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),), "sum")


def mean_all(x: Tensor) -> Tensor:
    n = max(x.size, 1)
    return _result(
        x.data.mean() if x.size else np.zeros(()),
        (x,),
        lambda g: (np.broadcast_to(g / n, x.shape).copy(),),
        "mean",
    )


def cross_entropy(logits: Tensor, targets: np.ndarray, ignore_index: int = IGNORE_INDEX) -> Tensor:
    """Mean negative log-likelihood over positions whose target is not ``ignore_index``."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != logits.shape[:1]:
        raise ShapeError(f"cross_entropy: logits {logits.shape} vs targets {targets.shape}")
    valid = targets != ignore_index
    count = int(valid.sum())
    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.nonzero(valid)[0]
    loss = -log_probs[rows, targets[rows]].sum() / count if count else np.zeros(())

    def backward(g: np.ndarray):
        grad = np.zeros_like(logits.data)
        if count:
            grad[rows] = np.exp(log_probs[rows])
            grad[rows, targets[rows]] -= 1.0
            grad *= g / count
        return (grad,)

    return _result(loss, (logits,), backward, "cross_entropy")
