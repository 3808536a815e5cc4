"""Record files (mention samples, entity records) and dataset statistics.

Record files are UTF-8 text, one flat JSON object per line, with exactly the
field names of the corresponding type.  Readers are strict: malformed lines,
unknown or missing fields, duplicate ids, and dangling references are
rejected with the offending line number rather than repaired.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, fields
from typing import Iterable, Iterator

from .errors import DataError, ParseError

__all__ = [
    "MentionSample",
    "EntityRecord",
    "DatasetStats",
    "read_samples",
    "write_samples",
    "read_entities",
    "write_entities",
    "validate_references",
    "compute_stats",
    "truncate_text",
]

REPRESENTATION_SOURCES = ("original", "enhanced")


@dataclass(frozen=True)
class MentionSample:
    """One linking instance: a sentence, the mention inside it, and context ids."""

    id: str
    text: str
    mention: str
    image_id: str
    expert_c1: str
    expert_c2: str
    gold_entity_id: str


@dataclass(frozen=True)
class EntityRecord:
    """A knowledge-base entity and the text standing in for it at match time."""

    id: str
    name: str
    representation: str
    representation_source: str = "original"

    def __post_init__(self):
        if self.representation_source not in REPRESENTATION_SOURCES:
            raise DataError(
                f"representation_source must be one of {REPRESENTATION_SOURCES}, "
                f"got {self.representation_source!r}")
        if not self.representation:
            raise DataError(f"entity {self.id!r} has an empty representation")


@dataclass(frozen=True)
class DatasetStats:
    """Aggregate counts and mean lengths in the shape used for dataset tables."""

    sample_count: int
    entity_count: int
    mention_count: int
    mean_text_words: float
    mean_representation_chars: float


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(records: Iterable[dict], path: str) -> None:
    lines = [json.dumps(rec, ensure_ascii=False, separators=(", ", ": ")) for rec in records]
    _atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_jsonl(path: str, field_names: tuple[str, ...], what: str) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) pairs, enforcing the exact field set."""
    expected = set(field_names)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid {what} record: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{path}:{lineno}: {what} record is not an object")
            got = set(obj)
            if got != expected:
                missing = sorted(expected - got)
                extra = sorted(got - expected)
                detail = "; ".join(p for p in (
                    f"missing {missing}" if missing else "",
                    f"unexpected {extra}" if extra else "") if p)
                raise ParseError(f"{path}:{lineno}: {what} record fields do not match: {detail}")
            yield lineno, obj


_SAMPLE_FIELDS = tuple(f.name for f in fields(MentionSample))
_ENTITY_FIELDS = tuple(f.name for f in fields(EntityRecord))


def read_samples(path: str, entities: list[EntityRecord] | None = None) -> list[MentionSample]:
    """Load mention samples; with ``entities`` given, validate gold references."""
    samples: list[MentionSample] = []
    seen: dict[str, int] = {}
    for lineno, obj in read_jsonl(path, _SAMPLE_FIELDS, "sample"):
        for key, value in obj.items():
            if not isinstance(value, str):
                raise ParseError(f"{path}:{lineno}: field {key!r} must be a string")
        if obj["id"] in seen:
            raise DataError(
                f"{path}:{lineno}: duplicate sample id {obj['id']!r} "
                f"(first seen on line {seen[obj['id']]})")
        seen[obj["id"]] = lineno
        samples.append(MentionSample(**obj))
    if entities is not None:
        validate_references(samples, entities, source=path)
    return samples


def write_samples(samples: Iterable[MentionSample], path: str) -> None:
    write_jsonl(
        ({name: getattr(s, name) for name in _SAMPLE_FIELDS} for s in samples), path)


def read_entities(path: str, truncate_to: int | None = None) -> list[EntityRecord]:
    """Load entity records; ``truncate_to`` optionally caps representation length."""
    entities: list[EntityRecord] = []
    seen: dict[str, int] = {}
    for lineno, obj in read_jsonl(path, _ENTITY_FIELDS, "entity"):
        for key, value in obj.items():
            if not isinstance(value, str):
                raise ParseError(f"{path}:{lineno}: field {key!r} must be a string")
        if obj["id"] in seen:
            raise DataError(
                f"{path}:{lineno}: duplicate entity id {obj['id']!r} "
                f"(first seen on line {seen[obj['id']]})")
        seen[obj["id"]] = lineno
        try:
            record = EntityRecord(**obj)
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if truncate_to is not None:
            record = EntityRecord(
                id=record.id, name=record.name,
                representation=truncate_text(record.representation, truncate_to),
                representation_source=record.representation_source)
        entities.append(record)
    return entities


def write_entities(entities: Iterable[EntityRecord], path: str) -> None:
    write_jsonl(
        ({name: getattr(e, name) for name in _ENTITY_FIELDS} for e in entities), path)


def validate_references(samples: Iterable[MentionSample], entities: Iterable[EntityRecord],
                        source: str = "dataset") -> None:
    """Check that every gold_entity_id points at a known entity."""
    known = {e.id for e in entities}
    for sample in samples:
        if sample.gold_entity_id not in known:
            raise DataError(
                f"{source}: sample {sample.id!r} references unknown entity "
                f"{sample.gold_entity_id!r}")


def truncate_text(text: str, budget: int) -> str:
    """Cap a representation at ``budget`` characters (ingestion-time option)."""
    if budget < 1:
        raise DataError(f"truncation budget must be >= 1, got {budget}")
    return text[:budget]


def compute_stats(samples: list[MentionSample], entities: list[EntityRecord]) -> DatasetStats:
    """Count samples/entities/mentions and average text and representation lengths.

    A "sample" is a distinct sentence+image unit; each record is one mention
    of such a unit, so several records may share a unit.  Text length is
    counted in whitespace-separated words over the distinct units;
    representation length is counted in characters over entities.
    """
    units: dict[tuple[str, str], str] = {}
    for s in samples:
        units.setdefault((s.text, s.image_id), s.text)
    sample_count = len(units)
    mention_count = len(samples)
    mean_words = (
        sum(len(text.split()) for text in units.values()) / sample_count
        if sample_count else 0.0)
    mean_chars = (
        sum(len(e.representation) for e in entities) / len(entities)
        if entities else 0.0)
    return DatasetStats(
        sample_count=sample_count,
        entity_count=len(entities),
        mention_count=mention_count,
        mean_text_words=mean_words,
        mean_representation_chars=mean_chars,
    )
