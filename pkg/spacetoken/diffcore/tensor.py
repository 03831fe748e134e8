import logging
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from typing import Any

import numpy as np

from spacetoken.conf import CONFIG
from spacetoken.utils import SpaceTokenError

LOGGER = logging.getLogger(__name__)

_DTYPE_STACK: list[type[np.floating]] = [np.float64 if CONFIG.numerics.float64 else np.float32]


class ShapeError(SpaceTokenError):
    pass


class GraphError(SpaceTokenError):
    pass


def default_dtype() -> type[np.floating]:
    return _DTYPE_STACK[-1]


@contextmanager
def precision(dtype: type[np.floating]) -> Iterator[None]:
    """Temporarily switch the dtype every new tensor is created with."""
    _DTYPE_STACK.append(dtype)
    try:
        yield
    finally:
        _DTYPE_STACK.pop()


def float64() -> Any:
    return precision(np.float64)


_GRAD_STACK: list[bool] = [True]


def grad_enabled() -> bool:
    return _GRAD_STACK[-1]


@contextmanager
def no_grad() -> Iterator[None]:
    """Forward passes inside record no tape (inference)."""
    _GRAD_STACK.append(False)
    try:
        yield
    finally:
        _GRAD_STACK.pop()


BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tensor:
    """
    Dense float array with an optional reverse-mode tape entry.

    A tensor only records its parents when at least one of them requires a
    gradient, so constant sub-expressions never enter the graph.
    """

    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "op")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        parents: tuple["Tensor", ...] = (),
        backward_fn: BackwardFn | None = None,
        op: str = "leaf",
    ):
        self.data: np.ndarray = np.asarray(data, dtype=default_dtype())
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.parents = parents if requires_grad else ()
        self.backward_fn = backward_fn if requires_grad else None
        self.op = op

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def accumulate(self, grad: np.ndarray):
        if not self.requires_grad:
            return
        assert grad.shape == self.data.shape, (
            f"Invariant: gradient shape {grad.shape} must match value shape {self.data.shape}"
        )
        self.grad = grad.astype(self.data.dtype) if self.grad is None else self.grad + grad

    def backward(self):
        backward(self)

    def __add__(self, other: Any) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.mul(other, self)

    def __neg__(self) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.mul(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.index(self, index)

    def reshape(self, *shape: int) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.reshape(self, shape)

    def sum(self) -> "Tensor":
        from spacetoken.diffcore import ops

        return ops.sum_all(self)


def as_tensor(value: Any) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def constant(value: Any) -> Tensor:
    return Tensor(value, requires_grad=False, op="const")


def _topological_order(root: Tensor) -> list[Tensor]:
    # Iterative post-order DFS; parents are visited in their recorded order so
    # the traversal (and gradient accumulation order) is fixed for a graph.
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in reversed(node.parents):
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor):
    if loss.size != 1 or loss.ndim != 0:
        raise GraphError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        LOGGER.debug("backward on a constant loss is a no-op")
        return
    order = _topological_order(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        grad = grads.pop(id(node), None)
        if grad is None:
            continue
        if node.backward_fn is None:
            node.accumulate(grad)
            continue
        for parent, parent_grad in zip(node.parents, node.backward_fn(grad), strict=True):
            if parent_grad is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = parent_grad if key not in grads else grads[key] + parent_grad
