import math

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field, field_validator, model_validator

from spacetoken.utils import SpaceTokenError

WORLD_XY_BOUND = 200.0
WORLD_Z_BOUND = 50.0


class GeometryError(SpaceTokenError):
    pass


class Coordinate3D(BaseModel):
    """Metric ego-frame position: x forward, y left, z up, origin at the rear axle."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    x: float
    y: float
    z: float = 0.0

    @model_validator(mode="after")
    def validate_finite(self) -> "Coordinate3D":
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"coordinate must be finite, got ({self.x}, {self.y}, {self.z})")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "Coordinate3D":
        z = float(values[2]) if len(values) > 2 else 0.0
        return cls(x=float(values[0]), y=float(values[1]), z=z)


class Intrinsics(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    fx: float
    fy: float
    cx: float
    cy: float

    @model_validator(mode="after")
    def validate_focal(self) -> "Intrinsics":
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")
        return self

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


class RigidTransform(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    rotation: list[list[float]]
    translation: list[float]

    @field_validator("rotation")
    @classmethod
    def validate_rotation(cls, value: list[list[float]]) -> list[list[float]]:
        r = np.asarray(value, dtype=np.float64)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-6:
            raise ValueError("rotation is not orthonormal within 1e-6")
        return value

    @field_validator("translation")
    @classmethod
    def validate_translation(cls, value: list[float]) -> list[float]:
        if len(value) != 3:
            raise ValueError(f"translation must have 3 components, got {len(value)}")
        return value

    def r(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=np.float64)

    def t(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=np.float64)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Maps [..., 3] points from the source into the target frame."""
        return points @ self.r().T + self.t()

    def apply_inverse(self, points: np.ndarray) -> np.ndarray:
        return (points - self.t()) @ self.r()


class Camera(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    name: str
    intrinsics: Intrinsics
    ego_from_camera: RigidTransform
    width: int
    height: int


class CameraRig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    cameras: list[Camera]

    def camera(self, index: int) -> Camera:
        if not 0 <= index < len(self.cameras):
            raise GeometryError(f"camera index {index} outside rig of {len(self.cameras)}")
        return self.cameras[index]


class PatchGrid(BaseModel):
    """Square patches of ``patch_size`` pixels tiling a ``width`` x ``height`` image."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    patch_size: int
    width: int
    height: int

    @model_validator(mode="after")
    def validate_tiling(self) -> "PatchGrid":
        if self.patch_size <= 0:
            raise ValueError(f"patch size must be positive, got {self.patch_size}")
        if self.width % self.patch_size or self.height % self.patch_size:
            raise ValueError(
                f"image {self.width}x{self.height} is not tiled by {self.patch_size}px patches"
            )
        return self

    @computed_field
    @property
    def rows(self) -> int:
        return self.height // self.patch_size

    @computed_field
    @property
    def cols(self) -> int:
        return self.width // self.patch_size

    def region(self, row: int, col: int) -> tuple[slice, slice]:
        p = self.patch_size
        return slice(row * p, (row + 1) * p), slice(col * p, (col + 1) * p)

    def centers(self) -> np.ndarray:
        """[rows*cols, 2] patch centers (u, v) in row-major order."""
        p = self.patch_size
        v, u = np.meshgrid(
            (np.arange(self.rows) + 0.5) * p, (np.arange(self.cols) + 0.5) * p, indexing="ij"
        )
        return np.stack([u.reshape(-1), v.reshape(-1)], axis=-1)
