"""Wire formats shared with the linking engine, written independently.

The sidecar deliberately re-implements the byte layouts instead of importing
the engine: the files are the contract between the two components.

Embedding files: magic "DIMEMB01", u32 LE version=1, u32 LE dim, u64 LE
count, then per record a u16 LE id byte length, the UTF-8 id, and dim
float32 LE values.

Record files are UTF-8 JSON-lines with fixed field sets (see SAMPLE_FIELDS
and ENTITY_FIELDS).  Writers are atomic (temp file + rename) and re-writing
the same logical content produces identical bytes.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from typing import Iterable, Sequence

import numpy as np

from .errors import RecordError

EMBEDDING_MAGIC = b"DIMEMB01"
FORMAT_VERSION = 1

SAMPLE_FIELDS = ("id", "text", "mention", "image_id", "expert_c1", "expert_c2",
                 "gold_entity_id")
ENTITY_FIELDS = ("id", "name", "representation", "representation_source")

EXPERT_BEGIN = "[CLS]"
EXPERT_SEP = "[SEP]"


def assemble_expert_text(caption: str, identity_answer: str) -> str:
    """Join caption and identity answer exactly as the engine expects."""
    return f"{EXPERT_BEGIN}{caption}{EXPERT_SEP}{identity_answer}"


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_embedding_file(vectors: Sequence[tuple[str, np.ndarray]], dim: int,
                         path: str) -> None:
    """Write (id, vector) pairs in the binary embedding layout."""
    if dim < 1:
        raise RecordError(f"embedding dim must be >= 1, got {dim}")
    seen: set[str] = set()
    chunks = [EMBEDDING_MAGIC, struct.pack("<IIQ", FORMAT_VERSION, dim, len(vectors))]
    for key, vec in vectors:
        if key in seen:
            raise RecordError(f"duplicate embedding id {key!r}")
        seen.add(key)
        arr = np.asarray(vec, dtype=np.float32).reshape(-1)
        if arr.shape != (dim,):
            raise RecordError(f"vector for {key!r} has length {arr.size}, expected {dim}")
        key_bytes = key.encode("utf-8")
        if len(key_bytes) > 0xFFFF:
            raise RecordError(f"id {key!r} exceeds the 65535-byte limit")
        chunks.append(struct.pack("<H", len(key_bytes)))
        chunks.append(key_bytes)
        chunks.append(arr.astype("<f4").tobytes())
    _atomic_write(path, b"".join(chunks))


def read_records(path: str, fields: tuple[str, ...], what: str) -> list[dict]:
    """Strict JSONL reader enforcing the exact field set."""
    expected = set(fields)
    records: list[dict] = []
    seen: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise RecordError(f"{path}:{lineno}: invalid {what} record: {exc.msg}") from exc
            if not isinstance(obj, dict) or set(obj) != expected:
                raise RecordError(f"{path}:{lineno}: {what} record fields must be {fields}")
            for key, value in obj.items():
                if not isinstance(value, str):
                    raise RecordError(f"{path}:{lineno}: field {key!r} must be a string")
            if obj["id"] in seen:
                raise RecordError(
                    f"{path}:{lineno}: duplicate {what} id {obj['id']!r} "
                    f"(first seen on line {seen[obj['id']]})")
            seen[obj["id"]] = lineno
            records.append(obj)
    return records


def write_records(records: Iterable[dict], fields: tuple[str, ...], path: str) -> None:
    lines = []
    for rec in records:
        ordered = {name: rec[name] for name in fields}
        lines.append(json.dumps(ordered, ensure_ascii=False, separators=(", ", ": ")))
    _atomic_write(path, "".join(line + "\n" for line in lines).encode("utf-8"))
