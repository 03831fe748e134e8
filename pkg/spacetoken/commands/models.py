from datetime import datetime
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from spacetoken.planner.models import ModelConfig
from spacetoken.trainer.models import TrainConfig

SCHEMA_VERSION = 1
MANIFEST_FILE = "manifest.json"


class ExperimentConfig(BaseModel):
    """The JSON file passed as ``train --config``."""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = SCHEMA_VERSION
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    @model_validator(mode="after")
    def validate_version(self) -> "ExperimentConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"config schema {self.schema_version}, expected {SCHEMA_VERSION}")
        return self


class RunManifest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    command: str
    argv: list[str]
    config: dict[str, Any]
    """Fully resolved configuration, file values with flag overrides applied"""
    seed: int | None = None
    version: str
    started: datetime
    finished: datetime | None = None
    outputs: dict[str, str] = {}
    """Output name to path relative to the run directory"""
