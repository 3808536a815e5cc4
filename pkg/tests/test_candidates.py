"""Fuzzy matching scores and candidate set generation."""

import random
import string

import pytest

from fuselink.candidates import (CandidateSet, generate_candidates, levenshtein,
                                 read_candidate_sets, similarity_ratio,
                                 write_candidate_sets)
from fuselink.data import EntityRecord
from fuselink.errors import ConfigurationError, DataError


def _entities(names, prefix="e"):
    return [
        EntityRecord(id=f"{prefix}{i:03d}", name=name, representation=f"About {name}.")
        for i, name in enumerate(names)
    ]


# ---------------------------------------------------------------------------
# levenshtein / similarity_ratio
# ---------------------------------------------------------------------------

def test_levenshtein_basics():
    assert levenshtein("", "") == 0
    assert levenshtein("abc", "") == 3
    assert levenshtein("kitten", "sitting") == 3
    assert levenshtein("flaw", "lawn") == 2


def test_similarity_self_is_one():
    assert similarity_ratio("Trump", "Trump") == 1.0


def test_similarity_disjoint_is_zero():
    assert similarity_ratio("abc", "xyz") == 0.0


def test_similarity_partial_window():
    assert similarity_ratio("Trump", "Donald Trump") == 1.0


def test_similarity_empty_edges():
    assert similarity_ratio("", "") == 1.0
    assert similarity_ratio("   ", "") == 1.0  # whitespace normalizes away
    assert similarity_ratio("", "abc") == 0.0


def test_similarity_case_and_whitespace_folding():
    assert similarity_ratio("  joe   BIDEN ", "Joe Biden") == 1.0


def test_similarity_symmetric_and_bounded():
    rng = random.Random(0)
    alphabet = string.ascii_lowercase + "  "
    for _ in range(500):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
        s_ab = similarity_ratio(a, b)
        s_ba = similarity_ratio(b, a)
        assert s_ab == s_ba
        assert 0.0 <= s_ab <= 1.0
        if a.strip():
            assert similarity_ratio(a, a) == 1.0


# ---------------------------------------------------------------------------
# generate_candidates
# ---------------------------------------------------------------------------

def test_candidate_count_capped_by_kb_size():
    entities = _entities(["alpha", "beta", "gamma"])
    got = generate_candidates("alpha", entities, k=100)
    assert len(got.entity_ids) == 3


def test_exact_match_ranked_first():
    entities = _entities(["alpha", "beta", "alphabet"])
    got = generate_candidates("beta", entities, k=2)
    assert got.entity_ids[0] == "e001"
    assert got.scores[0] == 1.0


def test_tie_broken_by_ascending_id():
    entities = _entities(["same", "same", "other"])
    got = generate_candidates("same", entities, k=2)
    assert got.entity_ids == ["e000", "e001"]
    sort_oracle = sorted(
        ((similarity_ratio("same", e.name), e.id) for e in entities),
        key=lambda pair: (-pair[0], pair[1]))
    assert got.entity_ids == [eid for _, eid in sort_oracle[:2]]


def test_deterministic():
    entities = _entities(["miranda", "mirabel", "marian", "mira", "randall"])
    first = generate_candidates("mira", entities, k=3, gold_id="e004")
    second = generate_candidates("mira", entities, k=3, gold_id="e004")
    assert first == second


def test_gold_injected_into_last_slot():
    entities = _entities(["aaaa", "aaab", "aaba", "zzzz"])
    got = generate_candidates("aaaa", entities, k=2, gold_id="e003")
    assert len(got.entity_ids) == 2
    assert got.entity_ids[-1] == "e003"
    assert got.gold_included
    assert got.scores == sorted(got.scores, reverse=True)


def test_gold_already_present_is_not_duplicated():
    entities = _entities(["aaaa", "zzzz"])
    got = generate_candidates("aaaa", entities, k=2, gold_id="e000")
    assert got.entity_ids.count("e000") == 1
    assert got.gold_included


def test_gold_injection_disabled_reports_absence():
    entities = _entities(["aaaa", "aaab", "zzzz"])
    got = generate_candidates("aaaa", entities, k=2, gold_id="e002", inject_gold=False)
    assert "e002" not in got.entity_ids
    assert not got.gold_included


def test_unknown_gold_is_data_error():
    with pytest.raises(DataError):
        generate_candidates("x", _entities(["a"]), k=1, gold_id="missing")


def test_bad_k_and_empty_entities():
    with pytest.raises(ConfigurationError):
        generate_candidates("x", _entities(["a"]), k=0)
    with pytest.raises(ConfigurationError):
        generate_candidates("x", [], k=1)


# ---------------------------------------------------------------------------
# candidate set file round trip
# ---------------------------------------------------------------------------

def test_candidate_sets_round_trip(tmp_path):
    sets = [
        CandidateSet(mention_id="m1", entity_ids=["a", "b"], scores=[0.9, 0.5],
                     gold_included=True),
        CandidateSet(mention_id="m2", entity_ids=["c"], scores=[1.0], gold_included=False),
    ]
    path = tmp_path / "candidates.jsonl"
    write_candidate_sets(sets, str(path))
    loaded = read_candidate_sets(str(path))
    assert loaded == sets
    write_candidate_sets(loaded, str(tmp_path / "again.jsonl"))
    assert (tmp_path / "again.jsonl").read_bytes() == path.read_bytes()


def test_candidate_set_invariants():
    with pytest.raises(DataError):
        CandidateSet(mention_id="m", entity_ids=["a", "a"], scores=[0.9, 0.8])
    with pytest.raises(DataError):
        CandidateSet(mention_id="m", entity_ids=["a", "b"], scores=[0.5, 0.9])
    with pytest.raises(DataError):
        CandidateSet(mention_id="m", entity_ids=["a"], scores=[1.5])
    with pytest.raises(DataError):
        CandidateSet(mention_id="m", entity_ids=["a", "b"], scores=[0.9])


def test_duplicate_mention_rejected(tmp_path):
    path = tmp_path / "candidates.jsonl"
    line = ('{"mention_id": "m1", "entity_ids": ["a"], "scores": [1.0], '
            '"gold_included": true}\n')
    path.write_text(line + line, encoding="utf-8")
    with pytest.raises(DataError, match="m1"):
        read_candidate_sets(str(path))
