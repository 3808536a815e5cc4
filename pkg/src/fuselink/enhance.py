"""Dynamic entity-representation enhancement through an LLM provider.

Each entity's name is sent to a provider with a fixed introduction prompt.
The reply is classified by a keyword cascade into one of six categories; only
replies judged usable replace the stored representation, every other
category falls back to the original text untouched.  Providers are either a
deterministic script replayer (offline tests) or a minimal chat-completion
HTTP client with bounded concurrency and exponential-backoff retries.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .data import EntityRecord, read_jsonl, write_jsonl, _atomic_write_text
from .errors import ConfigurationError, InputError, ProtocolError

__all__ = [
    "SYSTEM_PROMPT",
    "Category",
    "ClassifierRules",
    "Prompt",
    "build_prompt",
    "classify_response",
    "ProviderConfig",
    "MockProvider",
    "HttpProvider",
    "make_provider",
    "EnhancementReport",
    "EnhancementRecord",
    "enhance_entities",
    "read_script",
    "write_script",
    "write_audit_log",
    "write_raw_responses",
]

log = logging.getLogger(__name__)

SYSTEM_PROMPT = ("You are a helpful assistant designed to give a comprehensive "
                 "introduction about people. Who is this one?")


class Category(enum.Enum):
    """Outcome classes for a provider reply, matched by keyword patterns."""

    ENHANCED = "Enhanced"
    EMPTY = "Empty"
    REFUSAL = "Refusal"
    SPECULATIVE = "Speculative"
    NEEDS_VERIFICATION = "NeedsVerification"
    FICTIONAL = "Fictional"


@dataclass(frozen=True)
class ClassifierRules:
    """Patterns for the response cascade; extend via config, not code.

    ``speculative_patterns`` pairs must both appear for a match (a phrase
    like "is a common ... name" split around the variable middle).
    """

    refusal_patterns: tuple[str, ...] = ("Sorry, I cannot provide",)
    fictional_patterns: tuple[str, ...] = ("is a fictional name",)
    hedging_patterns: tuple[str, ...] = ("It is possible that",)
    speculative_patterns: tuple[tuple[str, str], ...] = (("is a common", "name"),)


DEFAULT_RULES = ClassifierRules()


@dataclass(frozen=True)
class Prompt:
    system: str
    user: str


def build_prompt(entity_name: str) -> Prompt:
    """Fixed system instruction plus the bare entity name as the user turn."""
    if not entity_name or not entity_name.strip():
        raise InputError("entity name is empty or whitespace-only")
    return Prompt(system=SYSTEM_PROMPT, user=entity_name)


def classify_response(text: str, rules: ClassifierRules = DEFAULT_RULES) -> Category:
    """First matching rule wins: empty, refusal, fictional, hedging, speculation."""
    if not text or not text.strip():
        return Category.EMPTY
    if any(p in text for p in rules.refusal_patterns):
        return Category.REFUSAL
    if any(p in text for p in rules.fictional_patterns):
        return Category.FICTIONAL
    if any(p in text for p in rules.hedging_patterns):
        return Category.NEEDS_VERIFICATION
    if any(a in text and b in text for a, b in rules.speculative_patterns):
        return Category.SPECULATIVE
    return Category.ENHANCED


@dataclass
class ProviderConfig:
    """How to reach the provider and how hard to try."""

    kind: str = "mock"
    endpoint: str = ""
    model: str = "gpt-3.5-turbo"
    max_retries: int = 2
    concurrency: int = 4
    timeout: float = 30.0
    backoff_base: float = 1.0
    backoff_factor: float = 2.0

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ConfigurationError(f"provider kind must be mock or http, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ConfigurationError("http provider requires an endpoint")
        if self.max_retries < 0:
            raise ConfigurationError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.concurrency < 1:
            raise ConfigurationError(f"concurrency must be >= 1, got {self.concurrency}")


class MockProvider:
    """Replays a script mapping entity id -> response text.

    Ids absent from the script yield an empty reply, which the classifier
    files under Empty; this keeps partial scripts usable.
    """

    def __init__(self, script: dict[str, str]):
        self.script = script

    def complete(self, entity: EntityRecord, prompt: Prompt) -> str:
        return self.script.get(entity.id, "")


class HttpProvider:
    """Minimal chat-completion client: system+user messages in, one choice out."""

    def __init__(self, config: ProviderConfig):
        self.config = config

    def complete(self, entity: EntityRecord, prompt: Prompt) -> str:
        import requests

        body = {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        }
        response = requests.post(self.config.endpoint, json=body, timeout=self.config.timeout)
        response.raise_for_status()
        try:
            payload = response.json()
            content = payload["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise ProtocolError(
                f"provider reply for entity {entity.id!r} is not a chat completion: {exc}"
            ) from exc
        if not isinstance(content, str):
            raise ProtocolError(f"provider reply for entity {entity.id!r} has non-text content")
        return content


def make_provider(config: ProviderConfig, script: dict[str, str] | None = None):
    if config.kind == "mock":
        return MockProvider(script or {})
    return HttpProvider(config)


@dataclass
class EnhancementReport:
    """How many entities landed in each category, plus the fallback tally."""

    counts: dict[str, int]
    total: int
    enhanced: int
    fallback: int


@dataclass(frozen=True)
class EnhancementRecord:
    entity_id: str
    category: Category
    response: str
    attempts: int


def _ask_with_retries(provider, entity: EntityRecord, prompt: Prompt,
                      config: ProviderConfig, rng: random.Random) -> tuple[str, int, bool]:
    """Returns (response, attempts, ok); ok=False after retries are exhausted."""
    attempts = 0
    delay = config.backoff_base
    while True:
        attempts += 1
        try:
            return provider.complete(entity, prompt), attempts, True
        except ProtocolError as exc:
            log.warning("entity %s: malformed provider reply: %s", entity.id, exc)
            return "", attempts, False
        except Exception as exc:  # transient transport errors are retried
            if attempts > config.max_retries:
                log.warning("entity %s: provider failed after %d attempts: %s",
                            entity.id, attempts, exc)
                return "", attempts, False
            if delay > 0:
                time.sleep(delay * (1.0 + 0.1 * rng.random()))
            delay *= config.backoff_factor


def enhance_entities(entities: list[EntityRecord], provider, config: ProviderConfig,
                     rules: ClassifierRules = DEFAULT_RULES,
                     ) -> tuple[list[EntityRecord], EnhancementReport, list[EnhancementRecord]]:
    """Query the provider for every entity, updating only usable replies.

    Requests run on a bounded thread pool but results are collected in input
    order, so the updated list, the report, and the audit records are all
    deterministic whenever the provider is.
    """
    rng = random.Random(0x5EED)
    prompts = [build_prompt(e.name) for e in entities]

    def work(pair):
        entity, prompt = pair
        response, attempts, ok = _ask_with_retries(provider, entity, prompt, config, rng)
        return response if ok else "", attempts

    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        outcomes = list(pool.map(work, zip(entities, prompts)))

    updated: list[EntityRecord] = []
    records: list[EnhancementRecord] = []
    counts = {category.value: 0 for category in Category}
    for entity, (response, attempts) in zip(entities, outcomes):
        category = classify_response(response, rules)
        counts[category.value] += 1
        if category is Category.ENHANCED:
            updated.append(replace(entity, representation=response,
                                   representation_source="enhanced"))
        else:
            updated.append(entity)
        records.append(EnhancementRecord(
            entity_id=entity.id, category=category, response=response, attempts=attempts))
    enhanced = counts[Category.ENHANCED.value]
    report = EnhancementReport(
        counts=counts, total=len(entities), enhanced=enhanced,
        fallback=len(entities) - enhanced)
    return updated, report, records


def read_script(path: str) -> dict[str, str]:
    """Load a mock-provider script: one {"id": ..., "response": ...} per line."""
    script: dict[str, str] = {}
    for lineno, obj in read_jsonl(path, ("id", "response"), "script"):
        if not isinstance(obj["id"], str) or not isinstance(obj["response"], str):
            raise ProtocolError(f"{path}:{lineno}: script fields must be strings")
        script[obj["id"]] = obj["response"]
    return script


def write_script(script: dict[str, str], path: str) -> None:
    write_jsonl(({"id": key, "response": value} for key, value in script.items()), path)


def write_audit_log(records: list[EnhancementRecord], path: str) -> None:
    """One line per entity: id, category, sha256 of the raw response."""
    lines = []
    for r in records:
        digest = hashlib.sha256(r.response.encode("utf-8")).hexdigest()
        lines.append(f"{r.entity_id}\t{r.category.value}\t{digest}\n")
    _atomic_write_text(path, "".join(lines))


def write_raw_responses(records: list[EnhancementRecord], path: str) -> None:
    """Persist every raw reply for audit, one JSON object per line."""
    write_jsonl(
        ({"id": r.entity_id, "category": r.category.value, "response": r.response,
          "attempts": r.attempts} for r in records), path)
