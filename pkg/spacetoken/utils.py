import hashlib
import json
import logging
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from pydantic import BaseModel

LOGGER = logging.getLogger(__name__)


class SpaceTokenError(Exception):
    message: str

    def __init__(self, message: str):
        self.message = message
        super().__init__(message)

    def __str__(self) -> str:
        return f"{self.__class__.__name__}: {self.message}"


T = TypeVar("T")  # Generic type variable


def notnone(value: T | None, message: str = "Value cannot be None") -> T:
    """
    Asserts that a value is not None and returns it with proper typing.

    Args:
        value: The value to check
        message: Custom error message for when assertion fails

    Returns:
        The input value if it's not None

    Raises:
        AssertionError: If the value is None
    """
    assert value is not None, message
    return value


def format_number(value: float, decimals: int = 1) -> str:
    """Fixed-precision rendering without a negative zero."""
    text = f"{value:.{decimals}f}"
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def rng_for(seed: int, *salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, *salt])


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def write_json(path: Path, payload: BaseModel | dict[str, Any] | list[Any]):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True)
    path.write_text(text + "\n")
    LOGGER.debug(f"Wrote {path}")


def read_json(path: Path) -> Any:
    with open(path) as f:
        return json.load(f)
