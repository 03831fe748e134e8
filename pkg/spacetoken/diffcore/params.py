import json
import logging
from collections.abc import Iterator
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from spacetoken.diffcore.tensor import Tensor, default_dtype
from spacetoken.utils import SpaceTokenError

LOGGER = logging.getLogger(__name__)

CKPT_VERSION = "spacetoken-ckpt-v1"
BLOB_DTYPE = np.dtype("<f4")


class CheckpointError(SpaceTokenError):
    pass


class ManifestEntry(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    shape: list[int]
    offset: int
    """Byte offset of the entry inside the blob file"""


class CheckpointManifest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    version: str = CKPT_VERSION
    blob: str
    entries: list[ManifestEntry]


class ParameterStore:
    """Ordered name -> trainable tensor map; iteration follows insertion order."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise CheckpointError(f"parameter {name!r} registered twice")
        tensor = Tensor(np.array(value, dtype=default_dtype()), requires_grad=True, op="param")
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._params.items())

    def names(self) -> list[str]:
        return list(self._params)

    def num_elements(self) -> int:
        return sum(t.size for t in self._params.values())

    def zero_grad(self):
        for tensor in self._params.values():
            tensor.zero_grad()

    def cast(self, dtype: type[np.floating]):
        for tensor in self._params.values():
            tensor.data = tensor.data.astype(dtype)
            if tensor.grad is not None:
                tensor.grad = tensor.grad.astype(dtype)

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self._params.items()}

    def save(self, directory: Path, stem: str = "params"):
        save_arrays(directory, stem, self.arrays())

    def load(self, directory: Path, stem: str = "params"):
        arrays = load_arrays(directory, stem)
        if list(arrays) != self.names():
            missing = set(self.names()) ^ set(arrays)
            raise CheckpointError(f"checkpoint parameters differ from model: {sorted(missing)}")
        for name, array in arrays.items():
            tensor = self._params[name]
            if array.shape != tensor.shape:
                raise CheckpointError(
                    f"shape of {name!r}: checkpoint {array.shape} vs model {tensor.shape}"
                )
            tensor.data = array.astype(tensor.data.dtype)
            tensor.grad = None


def save_arrays(directory: Path, stem: str, arrays: dict[str, np.ndarray]):
    directory.mkdir(parents=True, exist_ok=True)
    blob_name = f"{stem}.bin"
    entries = []
    offset = 0
    with open(directory / blob_name, "wb") as f:
        for name, array in arrays.items():
            raw = np.ascontiguousarray(array, dtype=BLOB_DTYPE).tobytes()
            entries.append(ManifestEntry(name=name, shape=list(array.shape), offset=offset))
            f.write(raw)
            offset += len(raw)
    manifest = CheckpointManifest(blob=blob_name, entries=entries)
    (directory / f"{stem}.json").write_text(manifest.model_dump_json(indent=2) + "\n")
    LOGGER.debug(f"Saved {len(entries)} arrays ({offset} bytes) to {directory / blob_name}")


def load_arrays(directory: Path, stem: str) -> dict[str, np.ndarray]:
    manifest_path = directory / f"{stem}.json"
    if not manifest_path.exists():
        raise CheckpointError(f"missing checkpoint manifest {manifest_path}")
    manifest = CheckpointManifest.model_validate(json.loads(manifest_path.read_text()))
    if manifest.version != CKPT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.version!r}")
    raw = (directory / manifest.blob).read_bytes()
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest.entries:
        count = int(np.prod(entry.shape, dtype=np.int64))
        end = entry.offset + count * BLOB_DTYPE.itemsize
        if end > len(raw):
            raise CheckpointError(f"blob truncated at entry {entry.name!r} (offset {entry.offset})")
        arrays[entry.name] = (
            np.frombuffer(raw, dtype=BLOB_DTYPE, count=count, offset=entry.offset)
            .reshape(entry.shape)
            .copy()
        )
    return arrays
