"""
Transformer building blocks over diffcore: rotary multi-head causal attention
and the pre-norm residual block.
"""

import math

import numpy as np
from cachetools.func import lru_cache

from spacetoken.diffcore import ops
from spacetoken.diffcore.nn import init_layer_norm, init_linear, init_mlp, layer_norm, linear, mlp
from spacetoken.diffcore.params import ParameterStore
from spacetoken.diffcore.tensor import Tensor, constant

ROTARY_BASE = 10000.0
MASK_VALUE = -1e9
MLP_RATIO = 4


@lru_cache(maxsize=32)
def rotary_tables(length: int, head_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin tables [length, head_dim] in the half-split layout rotate_half expects."""
    half = head_dim // 2
    inv_freq = ROTARY_BASE ** (-np.arange(half, dtype=np.float64) / half)
    angles = np.outer(np.arange(length, dtype=np.float64), inv_freq)
    cos = np.concatenate([np.cos(angles)] * 2, axis=-1)
    sin = np.concatenate([np.sin(angles)] * 2, axis=-1)
    cos.setflags(write=False)
    sin.setflags(write=False)
    return cos, sin


@lru_cache(maxsize=32)
def causal_mask(length: int) -> np.ndarray:
    mask = np.triu(np.full((length, length), MASK_VALUE), k=1)
    mask.setflags(write=False)
    return mask


def apply_rotary(x: Tensor, cos: np.ndarray, sin: np.ndarray) -> Tensor:
    """x [heads, length, head_dim] rotated by its sequence position."""
    return ops.add(ops.mul(x, constant(cos)), ops.mul(ops.rotate_half(x), constant(sin)))


def init_block(store: ParameterStore, name: str, width: int, rng: np.random.Generator):
    init_layer_norm(store, f"{name}.ln_attn", width)
    init_linear(store, f"{name}.qkv", width, 3 * width, rng)
    init_linear(store, f"{name}.out", width, width, rng)
    init_layer_norm(store, f"{name}.ln_mlp", width)
    init_mlp(store, f"{name}.mlp", [width, MLP_RATIO * width, width], rng)


def attention(store: ParameterStore, name: str, x: Tensor, heads: int) -> Tensor:
    length, width = x.shape
    head_dim = width // heads
    qkv = ops.reshape(linear(store, f"{name}.qkv", x), (length, 3, heads, head_dim))
    qkv = ops.transpose(qkv, (1, 2, 0, 3))
    cos, sin = rotary_tables(length, head_dim)
    q = apply_rotary(ops.index(qkv, 0), cos, sin)
    k = apply_rotary(ops.index(qkv, 1), cos, sin)
    v = ops.index(qkv, 2)

    scores = ops.matmul(q, ops.transpose(k, (0, 2, 1)))
    scores = ops.mul(scores, constant(1.0 / math.sqrt(head_dim)))
    scores = ops.add(scores, constant(causal_mask(length)))
    mixed = ops.matmul(ops.softmax(scores), v)
    merged = ops.reshape(ops.transpose(mixed, (1, 0, 2)), (length, width))
    return linear(store, f"{name}.out", merged)


def block(store: ParameterStore, name: str, x: Tensor, heads: int) -> Tensor:
    x = ops.add(x, attention(store, name, layer_norm(store, f"{name}.ln_attn", x), heads))
    return ops.add(x, mlp(store, f"{name}.mlp", layer_norm(store, f"{name}.ln_mlp", x), 2))
