"""Replayable single-question fixture: a film credited with an award it never received.

The bundled transcripts hold canned model replies for every prompt the
pipeline sends for this question (embedding retriever, logical form in both
stages), so the whole detect-then-answer path runs offline.
"""

from __future__ import annotations

import json
from pathlib import Path

from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph, Triple, load_triples
from .logiform import extraction_prompt, parse_logical_form, serialize_canonical
from .mitigate import FALSE_PREMISE_NOTE
from .providers import HashingEmbedder, ScriptedChat, load_transcripts
from .retrieve import RetrievalQuery, retrieve_embedding
from .synthetic import bundled_path
from .verdict import DetectionConfig, detection_prompt

QUESTION = 'Is "The Dark Knight" the recipient of the 16th Screen Actors Guild Awards?'
LOGICAL_FORM = "is_a_recipient_of('The Dark Knight', '16th Screen Actors Guild Awards')"
GOLD_TRIPLE = Triple("The Dark Knight", "award received", "81st Academy Awards")
EXTRACTION_REPLY = (
    "Predicate: is_a_recipient_of(x, y) holds when film x received award y.\n"
    "The question asks whether the film received the named award.\n"
    f"Logical form: {LOGICAL_FORM}"
)
# the model accepting the premise when asked plainly
ORIGINAL_ANSWER = "Yes, The Dark Knight received an award at the 16th Screen Actors Guild Awards."
CORRECTED_ANSWER = (
    "No, The Dark Knight did not receive the 16th Screen Actors Guild Awards; "
    "its recorded award is the 81st Academy Awards."
)

TRIPLES = [
    GOLD_TRIPLE,
    Triple("The Dark Knight", "director", "Christopher Nolan"),
    Triple("The Dark Knight", "cast member", "Heath Ledger"),
    Triple("The Dark Knight", "publication date", "2008"),
    Triple("Inglourious Basterds", "director", "Quentin Tarantino"),
    Triple("Christopher Nolan", "notable work", "Inception"),
]

CONFIG = DetectionConfig(retriever="embedding", lf_mode="both", k=1)


def write_fixture(out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "kg.jsonl", "w", encoding="utf-8") as fh:
        for t in TRIPLES:
            fh.write(json.dumps({"subject": t.subject, "relation": t.relation, "object": t.object},
                                ensure_ascii=False) + "\n")
    kg = KnowledgeGraph(TRIPLES)
    index = EmbeddingIndex.build(kg, HashingEmbedder())
    lf = parse_logical_form(LOGICAL_FORM)
    evidence = retrieve_embedding(RetrievalQuery.from_logical_form(lf), kg, index, k=1)
    if evidence.evidence != [GOLD_TRIPLE]:
        raise AssertionError(f"fixture graph retrieves {evidence.evidence}, expected the award triple")
    exchanges = [
        (extraction_prompt(QUESTION), EXTRACTION_REPLY),
        (detection_prompt(serialize_canonical(lf), evidence), "Yes"),
        (QUESTION, ORIGINAL_ANSWER),
        (f"{QUESTION} {FALSE_PREMISE_NOTE}", CORRECTED_ANSWER),
    ]
    with open(out / "transcripts.jsonl", "w", encoding="utf-8") as fh:
        for prompt, reply in exchanges:
            fh.write(json.dumps({"prompt": prompt, "response": reply}, ensure_ascii=False) + "\n")
    with open(out / "records.jsonl", "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"id": "dark-knight-sag", "question": QUESTION, "label": "FPQ", "hops": 2},
                            ensure_ascii=False) + "\n")


def load_case_study() -> tuple[KnowledgeGraph, EmbeddingIndex, ScriptedChat]:
    root = bundled_path("case_study")
    kg = load_triples(root / "kg.jsonl")
    index = EmbeddingIndex.build(kg, HashingEmbedder())
    return kg, index, ScriptedChat(load_transcripts(root / "transcripts.jsonl"))
