import argparse
import logging
import sys
from collections.abc import Iterable
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from spacetoken.commands.models import MANIFEST_FILE, RunManifest
from spacetoken.globs import code_version
from spacetoken.utils import SpaceTokenError, write_json

UTC = timezone.utc

LOGGER = logging.getLogger(__name__)


class UsageError(SpaceTokenError):
    """Flags that parse but do not combine; reported like argparse usage errors."""


class RunRecorder:
    """
    Collects what a command resolved and produced, then writes the run
    directory's single manifest.
    """

    def __init__(self, command: str, out: Path, config: dict[str, Any], seed: int | None = None):
        self.out = out
        self.manifest = RunManifest(
            command=command,
            argv=sys.argv[1:],
            config=config,
            seed=seed,
            version=code_version(),
            started=datetime.now(UTC),
        )

    def output(self, name: str, path: Path):
        try:
            self.manifest.outputs[name] = str(path.relative_to(self.out))
        except ValueError:
            self.manifest.outputs[name] = str(path)

    def finish(self) -> Path:
        self.manifest.finished = datetime.now(UTC)
        path = self.out / MANIFEST_FILE
        write_json(path, self.manifest)
        LOGGER.info(f"{self.manifest.command} finished, manifest at {path}")
        return path


def dump(config: BaseModel) -> dict[str, Any]:
    return config.model_dump(mode="json")


def overrides(args: argparse.Namespace, fields: Iterable[str]) -> dict[str, Any]:
    """Flags that were given on the command line, by config field name."""
    given = {field: getattr(args, field, None) for field in fields}
    return {field: value for field, value in given.items() if value is not None}


def existing_dir(value: str) -> Path:
    path = Path(value)
    if not path.is_dir():
        raise argparse.ArgumentTypeError(f"{value} is not a directory")
    return path


def existing_file(value: str) -> Path:
    path = Path(value)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"{value} is not a file")
    return path
