import logging

import numpy as np

from spacetoken.diffcore import ops
from spacetoken.diffcore.nn import init_mlp, mlp
from spacetoken.diffcore.params import ParameterStore
from spacetoken.diffcore.tensor import Tensor, constant
from spacetoken.spatial_pe.encoder import encode_batch
from spacetoken.spatial_pe.models import PeConfig, PeError, PeScale

LOGGER = logging.getLogger(__name__)

ALPHA_PARAM = "alpha_pe"
MLP_ENCODER = "pe_mlp_encoder"
MLP_INPUT_SCALE = 1.0 / 50.0


def register_alpha(store: ParameterStore, scale: PeScale):
    if scale.learnable:
        store.add(ALPHA_PARAM, np.array(scale.init))


def alpha_tensor(store: ParameterStore, scale: PeScale) -> Tensor:
    """The shared PE scale: the trainable parameter, or a constant when frozen."""
    if scale.learnable:
        return store[ALPHA_PARAM]
    return constant(scale.init)


def register_mlp_encoder(store: ParameterStore, width: int, rng: np.random.Generator):
    init_mlp(store, MLP_ENCODER, [3, width, width], rng)


def spatial_rows(
    coords: np.ndarray,
    bev: bool | np.ndarray,
    cfg: PeConfig,
    alpha: Tensor,
    store: ParameterStore | None = None,
    encoder: str = "sincos",
) -> Tensor:
    """Scaled encodings [N, dim] for [N, 3] coordinates."""
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    if encoder == "mlp":
        assert store is not None, "Invariant: the MLP encoder needs its parameter store"
        raw = coords.copy()
        raw[np.broadcast_to(np.asarray(bev, dtype=bool), (raw.shape[0],)), 2] = 0.0
        return ops.mul(alpha, mlp(store, MLP_ENCODER, constant(raw * MLP_INPUT_SCALE), 2))
    return ops.mul(alpha, constant(encode_batch(coords, cfg, bev)))


def inject(
    tokens: Tensor,
    coords: np.ndarray,
    alpha: Tensor,
    cfg: PeConfig,
    store: ParameterStore | None = None,
    encoder: str = "sincos",
) -> Tensor:
    """tokens + alpha * encode(coords) for [N, dim] tokens and [N, 3] coordinates."""
    coords = np.asarray(coords).reshape(-1, 3)
    if tokens.ndim != 2 or tokens.shape[-1] != cfg.dim:
        raise PeError(f"token width {tokens.shape} does not match encoding width {cfg.dim}")
    if coords.shape[0] != tokens.shape[0]:
        raise PeError(f"{tokens.shape[0]} tokens but {coords.shape[0]} coordinates")
    return ops.add(tokens, spatial_rows(coords, False, cfg, alpha, store, encoder))
