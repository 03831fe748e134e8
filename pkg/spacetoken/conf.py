import os
from dataclasses import dataclass

"""
A basic place to centralize process configuration. Experiment configuration
(model, training, scenes) lives in the pydantic models of each subpackage.
"""


@dataclass
class NumericsConfig:
    float64: bool
    """Switches diffcore's default dtype to float64 (gradient checking)"""

    @classmethod
    def from_env(cls) -> "NumericsConfig":
        return cls(float64=os.environ.get("SPACETOKEN_FLOAT64") == "true")


@dataclass
class RunConfig:
    workers: int
    ckpt_every: int
    """Checkpoint interval in optimizer steps, 0 means once per epoch"""

    @classmethod
    def from_env(cls) -> "RunConfig":
        return cls(
            workers=int(os.environ.get("SPACETOKEN_WORKERS", 1)),
            ckpt_every=int(os.environ.get("SPACETOKEN_CKPT_EVERY", 0)),
        )


@dataclass
class AppConfig:
    numerics: NumericsConfig
    run: RunConfig
    log_level: str
    sentry_dsn: str | None

    @classmethod
    def from_env(cls) -> "AppConfig":
        return cls(
            numerics=NumericsConfig.from_env(),
            run=RunConfig.from_env(),
            log_level=os.environ.get("LOG_LEVEL", "INFO"),
            sentry_dsn=os.environ.get("SENTRY_DSN"),
        )


CONFIG = AppConfig.from_env()
