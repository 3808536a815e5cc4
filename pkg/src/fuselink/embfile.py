"""Binary containers: embedding tables and named-tensor checkpoints.

Embedding files ("DIMEMB01") hold one float32 vector per string id:

    magic   8 bytes  b"DIMEMB01"
    version u32 LE   1
    dim     u32 LE
    count   u64 LE
    records, each:  u16 LE id byte length, id bytes (UTF-8), dim * f32 LE

Checkpoints ("DIMCKP01") reuse the record idea with tensor names as ids, a
per-record shape header, and float64 payloads:

    magic   8 bytes  b"DIMCKP01"
    version u32 LE   1
    count   u64 LE
    records, each:  u16 LE name length, name bytes (UTF-8),
                    u32 LE rank, rank * u32 LE dims, prod(dims) * f64 LE

Checkpoint records are written sorted by name, so identical parameters always
produce identical bytes.  Values are promoted to float64 when an embedding
file is read; writing casts back to float32, which makes read-then-write a
byte-identical round trip.  All writes go through a temp file plus rename.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError, FormatError

__all__ = [
    "EMBEDDING_MAGIC",
    "CHECKPOINT_MAGIC",
    "EmbeddingTable",
    "write_embeddings",
    "read_embeddings",
    "write_arrays",
    "read_arrays",
    "save_checkpoint",
    "load_checkpoint",
]

EMBEDDING_MAGIC = b"DIMEMB01"
CHECKPOINT_MAGIC = b"DIMCKP01"
_FORMAT_VERSION = 1


@dataclass
class EmbeddingTable:
    """Fixed-width vectors keyed by string id, float64 in memory."""

    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise DataError(f"embedding dim must be >= 1, got {self.dim}")
        for key, vec in self.entries.items():
            self.entries[key] = self._check(key, vec)

    def _check(self, key: str, vec) -> np.ndarray:
        arr = np.asarray(vec, dtype=np.float64).reshape(-1)
        if arr.shape != (self.dim,):
            raise DataError(f"vector for id {key!r} has length {arr.size}, expected {self.dim}")
        return arr

    def put(self, key: str, vec) -> None:
        if key in self.entries:
            raise DataError(f"duplicate embedding id {key!r}")
        self.entries[key] = self._check(key, vec)

    def vector(self, key: str) -> np.ndarray:
        vec = self.entries.get(key)
        if vec is None:
            raise DataError(f"no embedding stored for id {key!r}")
        return vec

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_embeddings(table: EmbeddingTable, path: str) -> None:
    """Serialize a table in the embedding layout, float32 payload."""
    if table.dim < 1:
        raise FormatError(f"refusing to write embedding file with dim {table.dim}")
    chunks = [EMBEDDING_MAGIC,
              struct.pack("<IIQ", _FORMAT_VERSION, table.dim, len(table.entries))]
    for key, vec in table.entries.items():
        key_bytes = key.encode("utf-8")
        if len(key_bytes) > 0xFFFF:
            raise FormatError(f"id {key!r} exceeds the 65535-byte limit")
        chunks.append(struct.pack("<H", len(key_bytes)))
        chunks.append(key_bytes)
        chunks.append(vec.astype("<f4").tobytes())
    _atomic_write(path, b"".join(chunks))


class _Cursor:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.path = path
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        end = self.pos + n
        if end > len(self.blob):
            raise FormatError(
                f"{self.path}: truncated while reading {what}: expected {n} bytes at "
                f"offset {self.pos}, only {len(self.blob) - self.pos} available")
        piece = self.blob[self.pos:end]
        self.pos = end
        return piece

    def done(self) -> bool:
        return self.pos == len(self.blob)


def read_embeddings(path: str) -> EmbeddingTable:
    """Parse an embedding file, promoting values to float64."""
    with open(path, "rb") as fh:
        blob = fh.read()
    cur = _Cursor(blob, path)
    magic = cur.take(8, "magic")
    if magic != EMBEDDING_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {EMBEDDING_MAGIC!r}")
    version, dim, count = struct.unpack("<IIQ", cur.take(16, "header"))
    if version != _FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if dim < 1:
        raise FormatError(f"{path}: header declares dim {dim}")
    table = EmbeddingTable(dim=dim)
    vec_bytes = 4 * dim
    for index in range(count):
        (id_len,) = struct.unpack("<H", cur.take(2, f"id length of record {index}"))
        key = cur.take(id_len, f"id of record {index}").decode("utf-8")
        payload = cur.take(vec_bytes, f"vector of record {index} ({key!r})")
        if key in table.entries:
            raise FormatError(f"{path}: duplicate id {key!r} in record {index}")
        table.entries[key] = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    if not cur.done():
        raise FormatError(
            f"{path}: {len(blob) - cur.pos} trailing bytes after {count} records")
    return table


def write_arrays(arrays: dict[str, np.ndarray], path: str) -> None:
    """Serialize named float64 arrays sorted by name (checkpoint layout)."""
    chunks = [CHECKPOINT_MAGIC, struct.pack("<IQ", _FORMAT_VERSION, len(arrays))]
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype=np.float64)
        name_bytes = name.encode("utf-8")
        if len(name_bytes) > 0xFFFF:
            raise FormatError(f"tensor name {name!r} exceeds the 65535-byte limit")
        chunks.append(struct.pack("<H", len(name_bytes)))
        chunks.append(name_bytes)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b"")
        chunks.append(arr.astype("<f8").tobytes())
    _atomic_write(path, b"".join(chunks))


def read_arrays(path: str) -> dict[str, np.ndarray]:
    """Parse a checkpoint container back into named float64 arrays."""
    with open(path, "rb") as fh:
        blob = fh.read()
    cur = _Cursor(blob, path)
    magic = cur.take(8, "magic")
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    version, count = struct.unpack("<IQ", cur.take(12, "header"))
    if version != _FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    arrays: dict[str, np.ndarray] = {}
    for index in range(count):
        (name_len,) = struct.unpack("<H", cur.take(2, f"name length of record {index}"))
        name = cur.take(name_len, f"name of record {index}").decode("utf-8")
        (rank,) = struct.unpack("<I", cur.take(4, f"rank of {name!r}"))
        if rank > 8:
            raise FormatError(f"{path}: implausible rank {rank} for tensor {name!r}")
        shape = struct.unpack(f"<{rank}I", cur.take(4 * rank, f"shape of {name!r}"))
        n_values = int(np.prod(shape)) if rank else 1
        payload = cur.take(8 * n_values, f"payload of {name!r}")
        if name in arrays:
            raise FormatError(f"{path}: duplicate tensor name {name!r}")
        arrays[name] = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    if not cur.done():
        raise FormatError(
            f"{path}: {len(blob) - cur.pos} trailing bytes after {count} records")
    return arrays


def save_checkpoint(params, path: str) -> None:
    """Write all model weights under their stable names."""
    from .fusion import params_to_arrays

    write_arrays(params_to_arrays(params), path)


def load_checkpoint(path: str, expect_dim: int | None = None):
    """Rebuild model weights from a checkpoint, optionally pinning the width."""
    from .fusion import params_from_arrays

    params = params_from_arrays(read_arrays(path))
    if expect_dim is not None and params.dim != expect_dim:
        raise DimensionError(
            f"checkpoint width {params.dim} does not match expected {expect_dim}")
    return params
