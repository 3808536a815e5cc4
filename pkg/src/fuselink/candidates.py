"""Fuzzy string matching and candidate entity selection.

The similarity score is the maximum of a full-string ratio and a windowed
partial ratio, both derived from Levenshtein distance on case-folded,
whitespace-normalized text.  The definition is fixed so candidate sets are
reproducible bit-for-bit across runs; no external fuzzy-matching library is
involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .data import read_jsonl, write_jsonl, EntityRecord
from .errors import ConfigurationError, DataError, ParseError

__all__ = [
    "CandidateSet",
    "levenshtein",
    "similarity_ratio",
    "generate_candidates",
    "read_candidate_sets",
    "write_candidate_sets",
]


@dataclass
class CandidateSet:
    """Best-first candidate entities for one mention.

    ``entity_ids`` and ``scores`` are parallel; scores are non-increasing and
    lie in [0, 1].  ``gold_included`` records whether the gold entity is a
    member of the final set (naturally or by injection).
    """

    mention_id: str
    entity_ids: list[str] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    gold_included: bool = False

    def __post_init__(self):
        if len(self.entity_ids) != len(self.scores):
            raise DataError(
                f"candidate set {self.mention_id!r}: {len(self.entity_ids)} ids vs "
                f"{len(self.scores)} scores")
        if len(set(self.entity_ids)) != len(self.entity_ids):
            raise DataError(f"candidate set {self.mention_id!r} has duplicate entity ids")
        for value in self.scores:
            if not 0.0 <= value <= 1.0:
                raise DataError(
                    f"candidate set {self.mention_id!r} has score {value} outside [0, 1]")
        if any(a < b for a, b in zip(self.scores, self.scores[1:])):
            raise DataError(f"candidate set {self.mention_id!r} scores are not non-increasing")


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert/delete/substitute), two-row dynamic program."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            curr.append(min(curr[j - 1] + 1, prev[j] + 1, prev[j - 1] + cost))
        prev = curr
    return prev[-1]


def _normalize(s: str) -> str:
    return " ".join(s.lower().split())


def _full_ratio(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    longest = max(len(a), len(b))
    return 1.0 - levenshtein(a, b) / longest


def similarity_ratio(a: str, b: str) -> float:
    """Fuzzy similarity in [0, 1]: max of full and windowed-partial ratio.

    Inputs are lowercased and whitespace-normalized first.  The partial ratio
    slides a window the length of the shorter string across the longer one
    and takes the best full ratio, which lets a mention match inside a longer
    entity name.  Two empty strings score 1.0; one empty string scores 0.0.
    """
    a = _normalize(a)
    b = _normalize(b)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    best = _full_ratio(a, b)
    shorter, longer = (a, b) if len(a) <= len(b) else (b, a)
    width = len(shorter)
    for start in range(len(longer) - width + 1):
        if best >= 1.0:
            break
        best = max(best, _full_ratio(shorter, longer[start:start + width]))
    return best


def generate_candidates(mention: str, entities: list[EntityRecord], k: int,
                        gold_id: str | None = None, inject_gold: bool = True,
                        mention_id: str = "") -> CandidateSet:
    """Select the top-k entities by name similarity to the mention.

    Ties break on ascending entity id, so the output is deterministic.  When
    ``gold_id`` is given with ``inject_gold``, a gold entity missing from the
    top-k replaces the lowest-scored slot (keeping its own true score, which
    is never larger than the displaced one).
    """
    if k < 1:
        raise ConfigurationError(f"candidate count k must be >= 1, got {k}")
    if not entities:
        raise ConfigurationError("cannot generate candidates from an empty entity list")
    by_id = {e.id: e for e in entities}
    if gold_id is not None and gold_id not in by_id:
        raise DataError(f"gold entity {gold_id!r} is not in the knowledge base")
    scored = sorted(
        ((similarity_ratio(mention, e.name), e.id) for e in entities),
        key=lambda pair: (-pair[0], pair[1]))
    top = scored[:k]
    chosen = [eid for _, eid in top]
    if gold_id is not None and inject_gold and gold_id not in chosen:
        gold_score = next(score for score, eid in scored if eid == gold_id)
        top = top[:-1] + [(gold_score, gold_id)]
        chosen = [eid for _, eid in top]
    return CandidateSet(
        mention_id=mention_id,
        entity_ids=chosen,
        scores=[score for score, _ in top],
        gold_included=gold_id is not None and gold_id in chosen,
    )


_CANDIDATE_FIELDS = ("mention_id", "entity_ids", "scores", "gold_included")


def write_candidate_sets(sets: list[CandidateSet], path: str) -> None:
    write_jsonl(
        ({"mention_id": c.mention_id, "entity_ids": c.entity_ids,
          "scores": c.scores, "gold_included": c.gold_included} for c in sets), path)


def read_candidate_sets(path: str) -> list[CandidateSet]:
    sets: list[CandidateSet] = []
    seen: dict[str, int] = {}
    for lineno, obj in read_jsonl(path, _CANDIDATE_FIELDS, "candidate set"):
        if not isinstance(obj["mention_id"], str):
            raise ParseError(f"{path}:{lineno}: mention_id must be a string")
        if not isinstance(obj["entity_ids"], list) or not isinstance(obj["scores"], list):
            raise ParseError(f"{path}:{lineno}: entity_ids and scores must be lists")
        if not isinstance(obj["gold_included"], bool):
            raise ParseError(f"{path}:{lineno}: gold_included must be a boolean")
        if obj["mention_id"] in seen:
            raise DataError(
                f"{path}:{lineno}: duplicate candidate set for mention "
                f"{obj['mention_id']!r} (first seen on line {seen[obj['mention_id']]})")
        seen[obj["mention_id"]] = lineno
        try:
            sets.append(CandidateSet(
                mention_id=obj["mention_id"],
                entity_ids=[str(e) for e in obj["entity_ids"]],
                scores=[float(s) for s in obj["scores"]],
                gold_included=obj["gold_included"]))
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return sets
