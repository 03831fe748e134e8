import logging

import numpy as np
from cachetools.func import lru_cache

from spacetoken.geometry.models import Coordinate3D
from spacetoken.spatial_pe.models import PeConfig, PeError, SpatialEncoding

LOGGER = logging.getLogger(__name__)


@lru_cache(maxsize=64)
def axis_frequencies(width: int, base: float) -> np.ndarray:
    """Inverse frequencies base^(-2i/width) for i = 0..ceil(width/2)-1."""
    i = np.arange((width + 1) // 2, dtype=np.float64)
    freqs = base ** (-2.0 * i / width)
    freqs.setflags(write=False)
    return freqs


def encode_axis(values: np.ndarray, width: int, base: float) -> np.ndarray:
    """
    [N] positions to [N, width] interleaved sin/cos pairs.

    An odd width leaves one unpaired trailing slot, filled with the sine of the
    next frequency index.
    """
    angles = values[:, None] * axis_frequencies(width, base)[None, :]
    out = np.empty((values.shape[0], width), dtype=np.float64)
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles[:, : width // 2])
    return out


def encode_batch(coords: np.ndarray, cfg: PeConfig, bev: bool | np.ndarray = False) -> np.ndarray:
    """[N, 3] coordinates to [N, dim] encodings; ``bev`` rows get a zero z block."""
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(coords)):
        raise PeError("cannot encode non-finite coordinates")
    d_x, d_y, d_z = cfg.widths
    out = np.concatenate(
        [
            encode_axis(coords[:, 0], d_x, cfg.base),
            encode_axis(coords[:, 1], d_y, cfg.base),
            encode_axis(coords[:, 2], d_z, cfg.base),
        ],
        axis=-1,
    )
    bev_rows = np.broadcast_to(np.asarray(bev, dtype=bool), (coords.shape[0],))
    out[bev_rows, d_x + d_y :] = 0.0
    return out


def encode(c: Coordinate3D, cfg: PeConfig) -> SpatialEncoding:
    values = encode_batch(c.as_array()[None], cfg)[0]
    return SpatialEncoding(values=values, bev=False, z_width=cfg.widths[2])


def encode_bev(x: float, y: float, cfg: PeConfig) -> SpatialEncoding:
    """Encoding of (x, y, 0) whose z block is zeroed, not evaluated at z = 0."""
    values = encode_batch(np.array([[x, y, 0.0]]), cfg, bev=True)[0]
    return SpatialEncoding(values=values, bev=True, z_width=cfg.widths[2])
