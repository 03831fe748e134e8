import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from spacetoken.utils import SpaceTokenError

SCHEMA_VERSION = 1


class TrainingDivergedError(SpaceTokenError):
    pass


LossKind = Literal["huber", "mae", "mse"]


class TrainConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    schema_version: int = SCHEMA_VERSION
    epochs: int = 1
    batch_size: int = 4
    lr: float = 3e-4
    """Peak learning rate; cosine-annealed to zero over the run"""
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip: float = 1.0
    seed: int = 0
    loss: LossKind = "huber"
    huber_delta: float = 1.0
    reg_weight: float = 1.0
    ckpt_every: int | None = Field(None)
    """Checkpoint interval in steps; None defers to SPACETOKEN_CKPT_EVERY, 0 means per epoch"""

    @field_validator("epochs", "batch_size")
    @classmethod
    def validate_counts(cls, value: int) -> int:
        if value <= 0:
            raise ValueError(f"must be positive, got {value}")
        return value

    @field_validator("lr", "huber_delta", "eps", "grad_clip")
    @classmethod
    def validate_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def validate_rest(self) -> "TrainConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(
                f"train config schema {self.schema_version}, expected {SCHEMA_VERSION}"
            )
        if self.weight_decay < 0 or self.reg_weight < 0:
            raise ValueError("weight decay and regression weight must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError(f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        return self


class LossReport(BaseModel):
    """
    One optimizer step. ``reg_loss`` is the weighted regression term, so
    ``total = lm_loss + reg_loss``.
    """

    model_config = ConfigDict(populate_by_name=True)

    step: int
    lm_loss: float
    reg_loss: float
    total: float
    residuals: list[float] = []
    """Per-waypoint Euclidean residuals in meters"""
    lr: float = 0.0

    @model_validator(mode="after")
    def validate_total(self) -> "LossReport":
        if self.finite and abs(self.total - (self.lm_loss + self.reg_loss)) > 1e-6 * max(
            1.0, abs(self.total)
        ):
            raise ValueError(f"total {self.total} != lm {self.lm_loss} + reg {self.reg_loss}")
        return self

    @property
    def finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.lm_loss, self.reg_loss, self.total))


class EpochSummary(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    epoch: int
    steps: int
    lm_loss: float
    reg_loss: float
    total: float
    mean_residual: float | None = None


class TrainerState(BaseModel):
    """Where a run stands; saved next to every checkpoint so resuming is exact."""

    model_config = ConfigDict(populate_by_name=True)

    step: int = 0
    epoch: int = 0
    batch: int = 0
    """Index of the next batch within ``epoch``"""
    total_steps: int
    optimizer_steps: int = 0


class TrainResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    first: LossReport | None
    last: LossReport | None
    epochs: list[EpochSummary]
    checkpoint: str
    """Directory of the final checkpoint"""
