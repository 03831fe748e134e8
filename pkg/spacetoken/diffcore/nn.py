"""Store-keyed layer helpers: parameters live in a ParameterStore under dotted names."""

import numpy as np

from spacetoken.diffcore import ops
from spacetoken.diffcore.params import ParameterStore
from spacetoken.diffcore.tensor import Tensor

INIT_STD = 0.02


def init_linear(
    store: ParameterStore,
    name: str,
    fan_in: int,
    fan_out: int,
    rng: np.random.Generator,
    std: float = INIT_STD,
    bias: bool = True,
):
    store.add(f"{name}.weight", rng.normal(0.0, std, size=(fan_in, fan_out)))
    if bias:
        store.add(f"{name}.bias", np.zeros(fan_out))


def linear(store: ParameterStore, name: str, x: Tensor) -> Tensor:
    out = ops.matmul(x, store[f"{name}.weight"])
    if f"{name}.bias" in store:
        out = ops.add(out, store[f"{name}.bias"])
    return out


def init_layer_norm(store: ParameterStore, name: str, width: int):
    store.add(f"{name}.gain", np.ones(width))
    store.add(f"{name}.bias", np.zeros(width))


def layer_norm(store: ParameterStore, name: str, x: Tensor) -> Tensor:
    return ops.layer_norm(x, store[f"{name}.gain"], store[f"{name}.bias"])


def init_mlp(
    store: ParameterStore, name: str, sizes: list[int], rng: np.random.Generator
):
    """Perceptron with GELU between consecutive layers: sizes [in, hidden, ..., out]."""
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:], strict=True)):
        init_linear(store, f"{name}.{i}", fan_in, fan_out, rng)


def mlp(store: ParameterStore, name: str, x: Tensor, layers: int) -> Tensor:
    for i in range(layers):
        x = linear(store, f"{name}.{i}", x)
        if i < layers - 1:
            x = ops.gelu(x)
    return x
