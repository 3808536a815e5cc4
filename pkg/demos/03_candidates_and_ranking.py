"""Fuzzy candidate generation and gold-entity ranking.

Run:  python3 demos/03_candidates_and_ranking.py
"""

import numpy as np

from fuselink.candidates import generate_candidates, similarity_ratio
from fuselink.data import EntityRecord
from fuselink.ranking import rank_of_gold, topk_accuracy

# The matcher is a fixed max(full, windowed-partial) Levenshtein ratio on
# case-folded, whitespace-normalized strings.
for a, b in [("Trump", "Trump"), ("Trump", "Donald Trump"),
             ("Trump", "Donald Tramp"), ("abc", "xyz")]:
    print(f"similarity({a!r:>16}, {b!r:>16}) = {similarity_ratio(a, b):.4f}")

kb = [
    EntityRecord(id="q1", name="Donald Trump", representation="45th US president."),
    EntityRecord(id="q2", name="Donald Duck", representation="Cartoon character."),
    EntityRecord(id="q3", name="Ivanka Trump", representation="Businessperson."),
    EntityRecord(id="q4", name="Melania Trump", representation="Former first lady."),
    EntityRecord(id="q5", name="Justin Trudeau", representation="Canadian politician."),
]

candidates = generate_candidates("Trump", kb, k=3, gold_id="q1", mention_id="demo")
print("\ntop-3 candidates for mention 'Trump':")
for eid, score in zip(candidates.entity_ids, candidates.scores):
    name = next(e.name for e in kb if e.id == eid)
    print(f"  {score:.4f}  {name}")
print("gold included:", candidates.gold_included)

# Ranking compares a fused feature against candidate embeddings by cosine.
rng = np.random.default_rng(2)
fused = rng.normal(size=8)
embeddings = [(e.id, rng.normal(size=8)) for e in kb]
embeddings[0] = ("q1", fused + 0.1 * rng.normal(size=8))  # gold near the query
results = [rank_of_gold(fused, "q1", embeddings, sample_id="demo")]
print("\ngold rank:", results[0].gold_rank, "of", results[0].candidate_count)
report = topk_accuracy(results, ks=(1, 5))
print("T@1:", report.accuracies[1], " T@5:", report.accuracies[5])
