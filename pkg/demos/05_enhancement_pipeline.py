"""Entity-representation refresh with categorized fallback.

A scripted mock provider stands in for the real endpoint, so the run is
fully offline and deterministic.

Run:  python3 demos/05_enhancement_pipeline.py
"""

from fuselink.data import EntityRecord
from fuselink.enhance import (MockProvider, ProviderConfig, build_prompt,
                              classify_response, enhance_entities)

prompt = build_prompt("Joe Biden")
print("system:", prompt.system)
print("user:  ", prompt.user)

replies = [
    "Joe Biden is an American politician who served as the 46th president.",
    "Sorry, I cannot provide an introduction to this entity.",
    "John Abbott is a common English given name and surname.",
    "It is possible that Edward J. Livernash is a private individual.",
    "John McDuffie is a fictional name, so there is no information.",
    "",
]
print("\nclassification cascade:")
for reply in replies:
    print(f"  {classify_response(reply).value:<18} <- {reply[:52]!r}")

entities = [
    EntityRecord(id="e1", name="Joe Biden", representation="Sex: male. Birth: 1942."),
    EntityRecord(id="e2", name="Edward J. Livernash", representation="US politician."),
    EntityRecord(id="e3", name="John McDuffie", representation="US representative."),
]
script = {
    "e1": replies[0],
    "e2": replies[3],
    "e3": replies[4],
}
config = ProviderConfig(kind="mock", concurrency=2, backoff_base=0.0)
updated, report, records = enhance_entities(entities, MockProvider(script), config)

print("\nper-category counts:", {k: v for k, v in report.counts.items() if v})
print(f"enhanced {report.enhanced}, fell back to originals {report.fallback}")
for before, after in zip(entities, updated):
    marker = "updated " if after.representation_source == "enhanced" else "kept    "
    print(f"  {marker} {before.id}: {after.representation[:60]!r}")
