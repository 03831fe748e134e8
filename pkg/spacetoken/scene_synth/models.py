import math
from typing import Literal

import numpy as np
import shapely
from pydantic import BaseModel, ConfigDict, computed_field, field_validator, model_validator
from shapely.geometry import Polygon

from spacetoken.coord_text.corpus import format_prompt
from spacetoken.geometry.footprint import union_region
from spacetoken.geometry.models import CameraRig, Coordinate3D
from spacetoken.utils import SpaceTokenError

DATA_VERSION = "spacetoken-data-v1"
COMMANDS = ("straight", "left", "right")
TEMPLATES = ("straight", "curve", "intersection")
MAX_AGENTS = 8
FAR_PLANE_M = 200.0
CHANNELS = ("drivable", "agent", "background")

AgentClass = Literal["car", "truck", "pedestrian"]

# length, width, height in meters
AGENT_DIMENSIONS: dict[str, tuple[float, float, float]] = {
    "car": (4.5, 2.0, 1.6),
    "truck": (8.0, 2.5, 3.0),
    "pedestrian": (0.8, 0.8, 1.8),
}


class SceneConfigError(SpaceTokenError):
    pass


class DatasetError(SpaceTokenError):
    pass


def _normalized(mix: dict[str, float], allowed: tuple[str, ...], what: str) -> dict[str, float]:
    unknown = set(mix) - set(allowed)
    if unknown:
        raise ValueError(f"unknown {what} {sorted(unknown)}; expected some of {allowed}")
    if any(w < 0 for w in mix.values()) or sum(mix.values()) <= 0:
        raise ValueError(f"{what} weights must be non-negative with a positive sum")
    total = sum(mix.values())
    return {k: v / total for k, v in mix.items()}


class SceneConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    image_size: int = 64
    history: int = 2
    horizon: int = 6
    dt: float = 0.5
    min_agents: int = 0
    max_agents: int = MAX_AGENTS
    max_speed: float = 20.0
    max_curvature: float = 0.2
    road_half_width: float = 4.0
    templates: dict[str, float] = {"straight": 1.0, "curve": 1.0, "intersection": 1.0}
    command_mix: dict[str, float] = {"straight": 0.5, "left": 0.25, "right": 0.25}
    placement_attempts: int = 200

    @field_validator("templates")
    @classmethod
    def validate_templates(cls, value: dict[str, float]) -> dict[str, float]:
        return _normalized(value, TEMPLATES, "templates")

    @field_validator("command_mix")
    @classmethod
    def validate_command_mix(cls, value: dict[str, float]) -> dict[str, float]:
        return _normalized(value, COMMANDS, "commands")

    @model_validator(mode="after")
    def validate_sizes(self) -> "SceneConfig":
        if self.image_size <= 0 or self.horizon < 1 or self.dt <= 0:
            raise ValueError("image size, horizon and dt must be positive")
        if self.history < 2:
            raise ValueError("ego dynamics need at least two history frames")
        return self

    def check_feasible(self):
        if not 0 <= self.min_agents <= self.max_agents <= MAX_AGENTS:
            raise SceneConfigError(
                f"agent range [{self.min_agents}, {self.max_agents}] outside [0, {MAX_AGENTS}]"
            )
        if not 0.0 <= self.max_curvature <= 0.2 or self.max_speed > 20.0:
            raise SceneConfigError("ego kinematics exceed |curvature| <= 0.2 and speed <= 20 m/s")


class EgoPose(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    x: float
    y: float
    heading: float
    speed: float


class AgentPose(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    x: float
    y: float
    heading: float


class Agent(BaseModel):
    """One dynamic agent; ``poses`` covers the history, the current frame and the horizon."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    category: AgentClass
    length: float
    width: float
    height: float
    poses: list[AgentPose]

    def box_center(self, frame: int) -> Coordinate3D:
        pose = self.poses[frame]
        return Coordinate3D(x=pose.x, y=pose.y, z=self.height / 2)


class PolygonRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    exterior: list[tuple[float, float]]
    holes: list[list[tuple[float, float]]] = []

    def polygon(self) -> Polygon:
        return Polygon(self.exterior, self.holes)

    @classmethod
    def from_geometry(cls, geometry: shapely.Geometry) -> list["PolygonRecord"]:
        parts = getattr(geometry, "geoms", [geometry])
        return [
            cls(
                exterior=[(float(x), float(y)) for x, y in p.exterior.coords],
                holes=[[(float(x), float(y)) for x, y in r.coords] for r in p.interiors],
            )
            for p in parts
            if isinstance(p, Polygon) and not p.is_empty
        ]


class CameraView(BaseModel):
    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True, frozen=True)

    features: np.ndarray
    depth: np.ndarray

    @model_validator(mode="after")
    def validate_shapes(self) -> "CameraView":
        if self.features.ndim != 3 or self.features.shape[1:] != self.depth.shape:
            raise ValueError(
                f"features {self.features.shape} and depth {self.depth.shape} do not align"
            )
        return self

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CameraView)
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.depth, other.depth)
        )


class EgoStatusRecord(BaseModel):
    """
    e_ego: history positions, longitudinal/lateral velocity and acceleration of
    the past two frames in the current ego frame, and the command one-hot.
    """

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    history_xy: list[tuple[float, float]]
    velocities: list[tuple[float, float]]
    accelerations: list[tuple[float, float]]
    command: list[float]

    @model_validator(mode="after")
    def validate_record(self) -> "EgoStatusRecord":
        if sorted(self.command) != [0.0] * (len(COMMANDS) - 1) + [1.0]:
            raise ValueError(f"command must be a one-hot over {COMMANDS}, got {self.command}")
        if not np.all(np.isfinite(self.features())):
            raise ValueError("ego status must be finite")
        return self

    def features(self) -> np.ndarray:
        return np.concatenate(
            [
                np.ravel(self.history_xy),
                np.ravel(self.velocities),
                np.ravel(self.accelerations),
                np.asarray(self.command, dtype=np.float64),
            ]
        ).astype(np.float64)


def ego_feature_width(history: int) -> int:
    return 2 * (history + 1) + 4 + 4 + len(COMMANDS)


class Scene(BaseModel):
    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True, frozen=True)

    seed: int
    template: str
    command: str
    dt: float
    history: list[EgoPose]
    future: list[EgoPose]
    agents: list[Agent]
    drivable: list[PolygonRecord]
    rig: CameraRig
    views: list[CameraView] = []

    @computed_field
    @property
    def current_frame(self) -> int:
        return len(self.history) - 1

    @property
    def horizon(self) -> int:
        return len(self.future)

    def drivable_region(self) -> shapely.Geometry:
        return union_region([p.polygon() for p in self.drivable])

    def future_xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.future], dtype=np.float64)

    def history_xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.history], dtype=np.float64)

    def waypoints(self) -> list[Coordinate3D]:
        return [Coordinate3D(x=p.x, y=p.y) for p in self.future]

    def agent_future_poses(self) -> list[list[AgentPose]]:
        """Per agent, the poses at the horizon timestamps."""
        start = self.current_frame + 1
        return [a.poses[start : start + self.horizon] for a in self.agents]

    def prompt(self) -> str:
        return format_prompt(
            self.command, [(a.category, a.box_center(self.current_frame)) for a in self.agents]
        )

    def ego_status(self) -> EgoStatusRecord:
        poses = self.history
        velocities = []
        for pose in poses:
            rel = pose.heading - poses[-1].heading
            velocities.append((pose.speed * math.cos(rel), pose.speed * math.sin(rel)))
        accelerations = [
            ((v[0] - u[0]) / self.dt, (v[1] - u[1]) / self.dt)
            for u, v in zip(velocities[-3:-1], velocities[-2:], strict=True)
        ]
        return EgoStatusRecord(
            history_xy=[(p.x, p.y) for p in poses],
            velocities=velocities[-2:],
            accelerations=accelerations,
            command=[1.0 if c == self.command else 0.0 for c in COMMANDS],
        )
