from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from spacetoken.planner.models import ModelConfig
from spacetoken.scene_synth.models import AgentPose
from spacetoken.trainer.models import TrainConfig
from spacetoken.utils import SpaceTokenError

SCHEMA_VERSION = 1
MIN_SEEDS = 3

Protocol = Literal["uniad", "stp3"]


class MetricInputError(SpaceTokenError):
    pass


class AblationError(SpaceTokenError):
    pass


class L2Horizons(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    l2_1s: float
    l2_2s: float
    l2_3s: float

    @computed_field
    @property
    def avg(self) -> float:
        return (self.l2_1s + self.l2_2s + self.l2_3s) / 3.0


class AgentFootprint(BaseModel):
    """An agent's box size and its poses at the evaluated timestamps."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    length: float
    width: float
    poses: list[AgentPose]


class TrajectoryMetrics(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    protocol: Protocol = "uniad"
    l2_1s: float
    l2_2s: float
    l2_3s: float
    l2_avg: float
    collision: float
    """Percent of future timestamps overlapping any agent"""
    intersection: float
    """Percent of future timestamps leaving the drivable region"""

    @model_validator(mode="after")
    def validate_ranges(self) -> "TrajectoryMetrics":
        if min(self.l2_1s, self.l2_2s, self.l2_3s, self.l2_avg) < 0:
            raise ValueError("L2 errors must be non-negative")
        for rate in (self.collision, self.intersection):
            if not 0.0 <= rate <= 100.0:
                raise ValueError(f"rate {rate} outside [0, 100]")
        return self


class ScenePrediction(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    seed: int
    command: str
    waypoints: list[tuple[float, float]]
    ground_truth: list[tuple[float, float]]
    grammar_valid: bool
    truncated: bool
    metrics: TrajectoryMetrics


class EvaluationReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    metrics: TrajectoryMetrics
    scenes: int
    grammar_valid: int
    """Outputs matching the answer grammar ("semantically reasonable")"""
    truncated: int
    endpoints: dict[str, list[tuple[float, float]]] = {}
    """Predicted final waypoints per driving command"""
    predictions: list[ScenePrediction] = []

    @computed_field
    @property
    def grammar_rate(self) -> float:
        return 100.0 * self.grammar_valid / self.scenes if self.scenes else 0.0


class AblationCellSpec(BaseModel):
    """One row of a matrix: overrides applied on top of the matrix's base configs."""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    model: dict[str, Any] = {}
    train: dict[str, Any] = {}


class AblationMatrix(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = SCHEMA_VERSION
    name: str
    seeds: list[int] = Field(default_factory=lambda: [1, 2, 3])
    base_model: ModelConfig = Field(default_factory=ModelConfig)
    base_train: TrainConfig = Field(default_factory=TrainConfig)
    cells: list[AblationCellSpec]
    protocol: Protocol = "uniad"
    max_steps: int | None = None
    """Caps optimizer steps per cell (smoke runs)"""

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, value: list[int]) -> list[int]:
        if len(set(value)) < MIN_SEEDS:
            raise ValueError(f"ablation cells need at least {MIN_SEEDS} distinct seeds")
        return value

    @model_validator(mode="after")
    def validate_cells(self) -> "AblationMatrix":
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"matrix schema {self.schema_version}, expected {SCHEMA_VERSION}")
        names = [c.name for c in self.cells]
        if not names or len(set(names)) != len(names):
            raise ValueError("an ablation matrix needs uniquely named cells")
        return self


class AblationCell(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    flags: dict[str, Any]
    """The flag vector: interface mode, PE switches, PE scale, base and loss kind"""
    seeds: list[int]
    status: Literal["ok", "failed"] = "ok"
    error: str | None = None
    metrics: TrajectoryMetrics | None = None
    l2_std: float | None = None
    collision_std: float | None = None
    intersection_std: float | None = None
    grammar_rate: float | None = None
