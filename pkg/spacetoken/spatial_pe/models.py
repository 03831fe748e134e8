import math

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, model_validator

from spacetoken.utils import SpaceTokenError

DEFAULT_BASE = 20000.0
DEFAULT_ALPHA = 0.1


class PeError(SpaceTokenError):
    pass


def split_widths(dim: int) -> tuple[int, int, int]:
    """
    Axis widths (d_x, d_y, d_z) for a total width ``dim``.

    d_x = d_y = ceil(dim / 3), moved to the nearest even value: up when that
    still leaves d_z >= 2, otherwise down. d_z takes the remainder and is odd
    only for odd ``dim``; it must keep at least one sin/cos pair.
    """
    d = math.ceil(dim / 3)
    if d % 2:
        d = d + 1 if dim - 2 * (d + 1) >= 2 else d - 1
    if d < 2 or dim - 2 * d < 2:
        raise PeError(f"encoding width {dim} leaves no full sin/cos pair on every axis")
    return d, d, dim - 2 * d


class PeConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    dim: int = 128
    base: float = DEFAULT_BASE

    @model_validator(mode="after")
    def validate_widths(self) -> "PeConfig":
        if self.base <= 1.0:
            raise ValueError(f"frequency base must exceed 1, got {self.base}")
        split_widths(self.dim)
        return self

    @computed_field
    @property
    def widths(self) -> tuple[int, int, int]:
        return split_widths(self.dim)


class PeScale(BaseModel):
    """The shared normalization factor applied to every injected 3D encoding."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    init: float = DEFAULT_ALPHA
    learnable: bool = True


class SpatialEncoding(BaseModel):
    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    bev: bool = False
    z_width: int = 0

    @model_validator(mode="after")
    def validate_bev_block(self) -> "SpatialEncoding":
        if self.bev and self.z_width and np.any(self.values[-self.z_width :] != 0):
            raise ValueError("BEV encodings must carry an all-zero z block")
        return self

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, SpatialEncoding)
            and self.bev == other.bev
            and np.array_equal(self.values, other.values)
        )

    def csv(self, decimals: int = 6) -> str:
        return ",".join(_csv_number(v, decimals) for v in self.values)


def _csv_number(value: float, decimals: int) -> str:
    text = f"{value:.{decimals}f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text
