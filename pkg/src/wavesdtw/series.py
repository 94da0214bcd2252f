"""Series and query-batch value types plus the on-disk dataset format.

A dataset is a pair of files sharing a stem: ``<stem>.manifest`` (plain
``key=value`` lines) and ``<stem>.f32le`` (raw little-endian binary32, no
header). Series are plain 1-D ``float32`` numpy arrays.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

F32LE = np.dtype("<f4")
MANIFEST_SUFFIX = ".manifest"
PAYLOAD_SUFFIX = ".f32le"


class DatasetError(ValueError):
    """Base class for malformed dataset files."""


class SizeMismatchError(DatasetError):
    def __init__(self, path, expected: int, actual: int):
        self.path = path
        self.expected = expected
        self.actual = actual
        super().__init__(f"{path}: expected {expected} payload bytes, found {actual}")


class UnsupportedFormatError(DatasetError):
    pass


def as_series(values) -> np.ndarray:
    """Coerce ``values`` to a contiguous 1-D binary32 series of length >= 1."""
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if arr.ndim != 1:
        raise ValueError(f"series must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("series must contain at least one sample")
    return arr


@dataclass(frozen=True, eq=False)
class QueryBatch:
    """``batch_size`` equal-length queries stored back to back.

    Query ``q`` occupies ``values[q * query_len:(q + 1) * query_len]``.
    """

    values: np.ndarray
    batch_size: int
    query_len: int

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32).reshape(-1)
        if self.batch_size < 1 or self.query_len < 1:
            raise ValueError("batch_size and query_len must be >= 1")
        if values.size != self.batch_size * self.query_len:
            raise ValueError(
                f"batch of {self.batch_size}x{self.query_len} needs "
                f"{self.batch_size * self.query_len} samples, got {values.size}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_queries(cls, queries) -> "QueryBatch":
        mat = np.asarray(queries, dtype=np.float32)
        if mat.ndim != 2:
            raise ValueError("from_queries expects a 2-D array-like of equal-length queries")
        return cls(mat.reshape(-1), mat.shape[0], mat.shape[1])

    def __len__(self):
        return self.batch_size

    def query(self, q: int) -> np.ndarray:
        if not 0 <= q < self.batch_size:
            raise IndexError(f"query index {q} out of range for batch of {self.batch_size}")
        m = self.query_len
        return self.values[q * m:(q + 1) * m]

    def as_matrix(self) -> np.ndarray:
        """View of the payload as a ``(batch_size, query_len)`` array."""
        return self.values.reshape(self.batch_size, self.query_len)

    def __iter__(self):
        return iter(self.as_matrix())


@dataclass(frozen=True)
class DatasetManifest:
    role: str
    batch_size: int
    length: int
    dtype: str = "f32le"
    normalized: bool = False
    seed: Optional[int] = None

    @property
    def sample_count(self) -> int:
        return self.batch_size * self.length

    def to_text(self) -> str:
        length_key = "query_len" if self.role == "batch" else "ref_len"
        lines = [
            f"role={self.role}",
            f"batch_size={self.batch_size}",
            f"{length_key}={self.length}",
            f"dtype={self.dtype}",
            f"normalized={int(self.normalized)}",
        ]
        if self.seed is not None:
            lines.append(f"seed={self.seed}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source="<manifest>") -> "DatasetManifest":
        fields = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DatasetError(f"{source}:{lineno}: expected key=value, got {raw!r}")
            fields[key.strip()] = value.strip()
        try:
            role = fields["role"]
            if role not in ("reference", "batch"):
                raise DatasetError(f"{source}: unknown role {role!r}")
            dtype = fields.get("dtype", "f32le")
            if dtype != "f32le":
                raise UnsupportedFormatError(f"{source}: unsupported dtype {dtype!r}")
            length_key = "query_len" if role == "batch" else "ref_len"
            seed = fields.get("seed")
            return cls(
                role=role,
                batch_size=int(fields.get("batch_size", 1)),
                length=int(fields[length_key]),
                dtype=dtype,
                normalized=fields.get("normalized", "0") == "1",
                seed=int(seed) if seed not in (None, "") else None,
            )
        except KeyError as exc:
            raise DatasetError(f"{source}: missing field {exc.args[0]!r}") from None


Payload = Union[np.ndarray, QueryBatch]


def _stem(path) -> Path:
    path = Path(path)
    if path.suffix in (MANIFEST_SUFFIX, PAYLOAD_SUFFIX):
        return path.with_suffix("")
    return path


def dataset_paths(path) -> tuple[Path, Path]:
    stem = _stem(path)
    return (stem.parent / (stem.name + MANIFEST_SUFFIX),
            stem.parent / (stem.name + PAYLOAD_SUFFIX))


def load_dataset(path) -> tuple[DatasetManifest, Payload]:
    """Read a manifest/payload pair. ``path`` may be the stem or either file."""
    manifest_path, payload_path = dataset_paths(path)
    manifest = DatasetManifest.from_text(manifest_path.read_text(), source=manifest_path)
    actual = os.path.getsize(payload_path)
    expected = manifest.sample_count * F32LE.itemsize
    if actual != expected:
        raise SizeMismatchError(payload_path, expected, actual)
    values = np.fromfile(payload_path, dtype=F32LE).astype(np.float32, copy=False)
    if manifest.role == "batch":
        return manifest, QueryBatch(values, manifest.batch_size, manifest.length)
    return manifest, as_series(values)


def store_dataset(manifest: DatasetManifest, payload: Payload, path) -> None:
    if manifest.dtype != "f32le":
        raise UnsupportedFormatError(f"unsupported dtype {manifest.dtype!r}")
    values = payload.values if isinstance(payload, QueryBatch) else np.asarray(payload, dtype=np.float32).reshape(-1)
    if values.size != manifest.sample_count:
        raise ValueError(
            f"manifest describes {manifest.batch_size}x{manifest.length} = "
            f"{manifest.sample_count} samples but payload has {values.size}"
        )
    manifest_path, payload_path = dataset_paths(path)
    try:
        manifest_path.parent.mkdir(parents=True, exist_ok=True)
        values.astype(F32LE, copy=False).tofile(payload_path)
        manifest_path.write_text(manifest.to_text())
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write dataset {manifest_path.parent / _stem(path).name}: {exc.strerror}") from exc


def manifest_for(payload: Payload, *, normalized=False, seed=None) -> DatasetManifest:
    if isinstance(payload, QueryBatch):
        return DatasetManifest("batch", payload.batch_size, payload.query_len,
                               normalized=normalized, seed=seed)
    return DatasetManifest("reference", 1, int(np.asarray(payload).size),
                           normalized=normalized, seed=seed)


def slice_query(reference, start: int, length: int) -> np.ndarray:
    reference = as_series(reference)
    if start < 0 or length < 1 or start + length > reference.size:
        raise IndexError(
            f"slice [{start}, {start + length}) out of bounds for series of length {reference.size}"
        )
    return reference[start:start + length].copy()
