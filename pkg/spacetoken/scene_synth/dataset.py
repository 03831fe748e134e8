import logging
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any, BinaryIO

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from spacetoken.scene_synth.models import DATA_VERSION, CameraView, DatasetError, Scene

LOGGER = logging.getLogger(__name__)

INDEX_FILE = "index.jsonl"
BLOB_FILE = "blobs.bin"
BLOB_DTYPE = np.dtype("<f4")
LENGTH_DTYPE = np.dtype("<u8")


class BlobRef(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    offset: int
    shape: list[int]

    @property
    def nbytes(self) -> int:
        return int(np.prod(self.shape)) * BLOB_DTYPE.itemsize


class SceneRecord(BaseModel):
    """One line of the index: the scene without its rasters, plus where they live."""

    model_config = ConfigDict(populate_by_name=True)

    version: str
    index: int
    scene: dict[str, Any]
    blobs: list[BlobRef]


def _write_blob(f: BinaryIO, array: np.ndarray) -> BlobRef:
    offset = f.tell()
    data = np.ascontiguousarray(array, dtype=BLOB_DTYPE).tobytes()
    f.write(np.array([len(data)], dtype=LENGTH_DTYPE).tobytes())
    f.write(data)
    return BlobRef(offset=offset, shape=list(array.shape))


def write_dataset(directory: Path, scenes: Iterable[Scene]) -> int:
    directory.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(directory / INDEX_FILE, "w") as index, open(directory / BLOB_FILE, "wb") as blobs:
        for i, scene in enumerate(scenes):
            refs = []
            for view in scene.views:
                refs.append(_write_blob(blobs, view.features))
                refs.append(_write_blob(blobs, view.depth))
            record = SceneRecord(
                version=DATA_VERSION,
                index=i,
                scene=scene.model_dump(mode="json", exclude={"views", "current_frame"}),
                blobs=refs,
            )
            index.write(record.model_dump_json() + "\n")
            count += 1
            if count % 100 == 0:
                LOGGER.info(f"Wrote {count} scenes to {directory}")
    LOGGER.info(f"Dataset {directory}: {count} scenes")
    return count


def _read_blob(f: BinaryIO, ref: BlobRef, record: int) -> np.ndarray:
    f.seek(ref.offset)
    header = f.read(LENGTH_DTYPE.itemsize)
    if len(header) != LENGTH_DTYPE.itemsize:
        raise DatasetError(f"record {record}: blob header truncated at offset {ref.offset}")
    length = int(np.frombuffer(header, dtype=LENGTH_DTYPE)[0])
    if length != ref.nbytes:
        raise DatasetError(
            f"record {record}: length header {length} at offset {ref.offset} "
            f"does not match shape {ref.shape} ({ref.nbytes} bytes)"
        )
    data = f.read(length)
    if len(data) != length:
        raise DatasetError(
            f"record {record}: blob truncated at offset {ref.offset} "
            f"({len(data)} of {length} bytes)"
        )
    return np.frombuffer(data, dtype=BLOB_DTYPE).reshape(ref.shape).astype(np.float32)


def _parse_record(line: str, lineno: int) -> SceneRecord:
    try:
        record = SceneRecord.model_validate_json(line)
    except ValidationError as e:
        raise DatasetError(
            f"record {lineno}: malformed index line ({e.error_count()} errors)"
        ) from e
    if record.version != DATA_VERSION:
        raise DatasetError(
            f"record {lineno}: version {record.version!r}, expected {DATA_VERSION!r}"
        )
    if len(record.blobs) % 2:
        raise DatasetError(f"record {lineno}: odd number of blobs {len(record.blobs)}")
    return record


def read_dataset(directory: Path) -> Iterator[Scene]:
    index_path, blob_path = directory / INDEX_FILE, directory / BLOB_FILE
    if not index_path.exists() or not blob_path.exists():
        raise DatasetError(f"{directory} is not a dataset (missing {INDEX_FILE} or {BLOB_FILE})")
    with open(index_path) as index, open(blob_path, "rb") as blobs:
        for lineno, line in enumerate(index):
            if not line.strip():
                continue
            record = _parse_record(line, lineno)
            arrays = [_read_blob(blobs, ref, lineno) for ref in record.blobs]
            views = [
                CameraView(features=arrays[i], depth=arrays[i + 1])
                for i in range(0, len(arrays), 2)
            ]
            yield Scene.model_validate({**record.scene, "views": views})


def load_dataset(directory: Path) -> list[Scene]:
    return list(read_dataset(directory))
