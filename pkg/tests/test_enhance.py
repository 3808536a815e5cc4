"""Prompt assembly, response classification, and the enhancement pipeline."""

import pytest

from fuselink.data import EntityRecord
from fuselink.enhance import (Category, ClassifierRules, MockProvider, ProviderConfig,
                              build_prompt, classify_response, enhance_entities,
                              make_provider, read_script, write_audit_log,
                              write_raw_responses, write_script)
from fuselink.errors import ConfigurationError, InputError, ProtocolError


def _entities(n, prefix="e"):
    return [
        EntityRecord(id=f"{prefix}{i:05d}", name=f"Person {i}",
                     representation=f"Original text about person {i}.")
        for i in range(n)
    ]


def _config(**kw):
    defaults = dict(kind="mock", max_retries=2, concurrency=4, backoff_base=0.0)
    defaults.update(kw)
    return ProviderConfig(**defaults)


# ---------------------------------------------------------------------------
# prompt
# ---------------------------------------------------------------------------

def test_build_prompt_fixed_instruction():
    prompt = build_prompt("Joe Biden")
    assert prompt.system == ("You are a helpful assistant designed to give a "
                             "comprehensive introduction about people. Who is this one?")
    assert prompt.user == "Joe Biden"


def test_prompts_differ_only_in_user_text():
    a = build_prompt("Alice")
    b = build_prompt("Bob")
    assert a.system == b.system
    assert a.user != b.user


def test_blank_name_rejected():
    with pytest.raises(InputError):
        build_prompt("   ")
    with pytest.raises(InputError):
        build_prompt("")


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("Sorry, I cannot provide an introduction to this entity.", Category.REFUSAL),
    ("John McDuffie is a fictional name, so there is no information.", Category.FICTIONAL),
    ("", Category.EMPTY),
    ("   \n\t ", Category.EMPTY),
    ("It is possible that Edward J. Livernash is a private individual without "
     "any notable achievements.", Category.NEEDS_VERIFICATION),
    ("John Abbott is a common English given name and surname.", Category.SPECULATIVE),
    ("Joe Biden is an American politician who served as president.", Category.ENHANCED),
])
def test_classify_examples(text, expected):
    assert classify_response(text) is expected


def test_classify_cascade_order():
    # refusal wins over later patterns when several would match
    text = "Sorry, I cannot provide details; it is a fictional name."
    assert classify_response(text) is Category.REFUSAL


def test_classify_custom_rules():
    rules = ClassifierRules(refusal_patterns=("I must decline",))
    assert classify_response("I must decline this request.", rules) is Category.REFUSAL
    assert classify_response("Sorry, I cannot provide it.", rules) is Category.ENHANCED


# ---------------------------------------------------------------------------
# providers and pipeline
# ---------------------------------------------------------------------------

def test_provider_config_validation():
    with pytest.raises(ConfigurationError):
        ProviderConfig(kind="http", endpoint="")
    with pytest.raises(ConfigurationError):
        ProviderConfig(kind="carrier-pigeon")
    with pytest.raises(ConfigurationError):
        ProviderConfig(max_retries=-1)


def test_all_enhanced_means_zero_fallback():
    entities = _entities(5)
    script = {e.id: f"{e.name} is a well documented figure." for e in entities}
    updated, report, records = enhance_entities(
        entities, MockProvider(script), _config())
    assert report.enhanced == 5 and report.fallback == 0
    assert all(e.representation_source == "enhanced" for e in updated)
    assert all(r.category is Category.ENHANCED for r in records)


def test_refusal_keeps_original_bytes():
    entities = _entities(3)
    script = {
        entities[0].id: f"{entities[0].name} is well documented.",
        entities[1].id: "Sorry, I cannot provide an introduction to this entity.",
        entities[2].id: f"{entities[2].name} is also well documented.",
    }
    updated, report, _ = enhance_entities(entities, MockProvider(script), _config())
    assert updated[1] == entities[1]
    assert updated[1].representation_source == "original"
    assert report.counts[Category.REFUSAL.value] == 1
    assert report.enhanced == 2 and report.fallback == 1


def test_counts_partition_entities():
    entities = _entities(30)
    script = {}
    for i, e in enumerate(entities):
        if i % 5 == 0:
            script[e.id] = ""
        elif i % 5 == 1:
            script[e.id] = "Sorry, I cannot provide anything."
        elif i % 5 == 2:
            script[e.id] = f"{e.name} is a fictional name."
        elif i % 5 == 3:
            script[e.id] = f"It is possible that {e.name} is private."
        else:
            script[e.id] = f"{e.name} is a notable scientist."
    _, report, records = enhance_entities(entities, MockProvider(script), _config())
    assert sum(report.counts.values()) == report.total == 30
    assert report.fallback == report.total - report.enhanced
    assert len(records) == 30


def test_missing_script_entry_counts_empty():
    entities = _entities(2)
    script = {entities[0].id: f"{entities[0].name} is documented."}
    updated, report, _ = enhance_entities(entities, MockProvider(script), _config())
    assert report.counts[Category.EMPTY.value] == 1
    assert updated[1] == entities[1]


class FlakyProvider:
    """Fails a fixed number of times per entity before succeeding."""

    def __init__(self, failures, response="A fine biography indeed."):
        self.failures = failures
        self.response = response
        self.calls = {}

    def complete(self, entity, prompt):
        n = self.calls.get(entity.id, 0)
        self.calls[entity.id] = n + 1
        if n < self.failures:
            raise ConnectionError("synthetic transport failure")
        return self.response


def test_retry_then_success():
    entities = _entities(3)
    provider = FlakyProvider(failures=2)
    updated, report, records = enhance_entities(entities, provider, _config(max_retries=2))
    assert report.enhanced == 3
    assert all(r.attempts == 3 for r in records)


def test_retries_exhausted_marks_empty():
    entities = _entities(2)
    provider = FlakyProvider(failures=5)
    updated, report, records = enhance_entities(entities, provider, _config(max_retries=1))
    assert report.counts[Category.EMPTY.value] == 2
    assert all(e.representation_source == "original" for e in updated)
    assert all(r.attempts == 2 for r in records)


class MalformedProvider:
    def complete(self, entity, prompt):
        raise ProtocolError("reply shape is wrong")


def test_protocol_error_counts_empty_without_retry():
    entities = _entities(2)
    _, report, records = enhance_entities(entities, MalformedProvider(), _config())
    assert report.counts[Category.EMPTY.value] == 2
    assert all(r.attempts == 1 for r in records)


def test_pipeline_deterministic():
    entities = _entities(12)
    script = {e.id: (f"{e.name} is notable." if i % 2 else "") for i, e in enumerate(entities)}
    runs = [enhance_entities(entities, MockProvider(script), _config(concurrency=3))
            for _ in range(2)]
    assert runs[0][0] == runs[1][0]
    assert runs[0][1] == runs[1][1]
    assert runs[0][2] == runs[1][2]


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def test_script_round_trip(tmp_path):
    script = {"e1": "hello", "e2": "Sorry, I cannot provide."}
    path = tmp_path / "script.jsonl"
    write_script(script, str(path))
    assert read_script(str(path)) == script


def test_audit_and_raw_response_files(tmp_path):
    entities = _entities(2)
    script = {entities[0].id: f"{entities[0].name} is notable."}
    _, _, records = enhance_entities(entities, MockProvider(script), _config())
    audit = tmp_path / "audit.tsv"
    raw = tmp_path / "raw.jsonl"
    write_audit_log(records, str(audit))
    write_raw_responses(records, str(raw))
    lines = audit.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    eid, category, digest = lines[0].split("\t")
    assert eid == entities[0].id and category == "Enhanced" and len(digest) == 64
    assert len(raw.read_text(encoding="utf-8").splitlines()) == 2


def test_make_provider_dispatch():
    assert isinstance(make_provider(_config(), script={}), MockProvider)
    httpp = make_provider(ProviderConfig(kind="http", endpoint="http://localhost:1/x"))
    assert httpp.config.endpoint.endswith("/x")
