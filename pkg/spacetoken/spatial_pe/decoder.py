import logging

import numpy as np
from cachetools.func import lru_cache

from spacetoken.diffcore import ops
from spacetoken.diffcore.nn import init_linear, init_mlp, linear, mlp
from spacetoken.diffcore.params import ParameterStore
from spacetoken.diffcore.tensor import Tensor, constant
from spacetoken.geometry.models import Coordinate3D
from spacetoken.spatial_pe.encoder import encode_batch
from spacetoken.spatial_pe.models import PeConfig, PeError

LOGGER = logging.getLogger(__name__)

DECODER_NAME = "pe_decoder"
OUTPUT_SCALE_M = 10.0
COARSE_STEP_M = 1.0
COARSE_EXTENT_M = 64.0
FINE_STEP_M = 0.1
FINE_EXTENT_M = 1.0


class PeDecoder:
    """
    Maps a hidden state back to a metric coordinate.

    ``kind="mlp"`` is the regression decoder: two layers width -> width -> 3 with
    GELU in between; the output is scaled to meters. ``kind="sincos"`` projects
    the hidden state into encoding space and reads the coordinate off the
    nearest BEV encoding.
    """

    def __init__(
        self, store: ParameterStore, width: int, kind: str = "mlp", cfg: PeConfig | None = None
    ):
        if kind not in ("mlp", "sincos"):
            raise PeError(f"unknown PE decoder kind {kind!r}")
        if kind == "sincos" and (cfg is None or cfg.dim != width):
            raise PeError("the sine-cosine decoder needs an encoding config of the model width")
        self.store = store
        self.width = width
        self.kind = kind
        self.cfg = cfg

    @classmethod
    def register(
        cls,
        store: ParameterStore,
        width: int,
        rng: np.random.Generator,
        kind: str = "mlp",
        cfg: PeConfig | None = None,
    ) -> "PeDecoder":
        if kind == "sincos":
            init_linear(store, f"{DECODER_NAME}.proj", width, width, rng)
        else:
            init_mlp(store, DECODER_NAME, [width, width, 3], rng)
        return cls(store, width, kind, cfg)

    @property
    def output_width(self) -> int:
        return 3 if self.kind == "mlp" else self.width

    def forward(self, hidden: Tensor) -> Tensor:
        """[..., width] hidden states to [..., 3] meters (mlp) or [..., width] encodings."""
        if hidden.shape[-1] != self.width:
            raise PeError(f"decoder expects width {self.width}, got {hidden.shape}")
        if self.kind == "sincos":
            return linear(self.store, f"{DECODER_NAME}.proj", hidden)
        return ops.mul(mlp(self.store, DECODER_NAME, hidden, 2), constant(OUTPUT_SCALE_M))

    def target(self, coords: np.ndarray, alpha: float) -> np.ndarray:
        """Regression target in the decoder's output space for [N, 3] coordinates."""
        coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
        if self.kind == "mlp":
            return coords
        return alpha * encode_batch(coords, self.cfg, bev=True)

    def to_coordinates(self, outputs: np.ndarray) -> np.ndarray:
        """Decoder outputs [N, output_width] to [N, 3] meters."""
        outputs = np.asarray(outputs, dtype=np.float64).reshape(-1, self.output_width)
        if self.kind == "mlp":
            return outputs
        return np.stack([lookup_bev(row, self.cfg) for row in outputs])


def decode(hidden: Tensor, dec: PeDecoder) -> Coordinate3D:
    return Coordinate3D.from_array(dec.to_coordinates(dec.forward(hidden).numpy())[0])


@lru_cache(maxsize=8)
def _coarse_grid(cfg: PeConfig) -> tuple[np.ndarray, np.ndarray]:
    axis = np.arange(-COARSE_EXTENT_M, COARSE_EXTENT_M + COARSE_STEP_M / 2, COARSE_STEP_M)
    return _grid_table(axis, axis, cfg)


def _grid_table(xs: np.ndarray, ys: np.ndarray, cfg: PeConfig) -> tuple[np.ndarray, np.ndarray]:
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    points = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)], axis=-1)
    table = encode_batch(points, cfg, bev=True)
    table /= np.linalg.norm(table, axis=-1, keepdims=True)
    table.setflags(write=False)
    return points, table


def _nearest(vector: np.ndarray, points: np.ndarray, table: np.ndarray) -> np.ndarray:
    return points[int(np.argmax(table @ vector))]


def lookup_bev(vector: np.ndarray, cfg: PeConfig) -> np.ndarray:
    """
    Ground coordinate whose BEV encoding has the highest cosine similarity to
    ``vector``: 1 m grid over the planning area, then 0.1 m around the winner.
    """
    norm = np.linalg.norm(vector)
    if not np.isfinite(norm) or norm == 0.0:
        return np.zeros(3)
    vector = vector / norm
    coarse = _nearest(vector, *_coarse_grid(cfg))
    offsets = np.arange(-FINE_EXTENT_M, FINE_EXTENT_M + FINE_STEP_M / 2, FINE_STEP_M)
    return _nearest(vector, *_grid_table(coarse[0] + offsets, coarse[1] + offsets, cfg))
