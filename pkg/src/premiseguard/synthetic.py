"""Synthetic film-domain benchmark with known ground truth.

Twenty films, each with an award, a director and a cast member. Every film
yields one true-premise question (its own award or cast member) and one
false-premise question (another film's award or cast member under the same
relation). The paraphrased variant refers to each film as "the film X Y Z"
instead of its graph surface "The X Y Z", while the logical forms keep the
exact graph surfaces.
"""

from __future__ import annotations

import json
import random
from collections import deque
from importlib import resources
from pathlib import Path

from .datasets import DatasetRecord, load_dataset
from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph, Triple, load_triples
from .logiform import LogicalForm, serialize_canonical
from .providers import HashingEmbedder, RecordingChat, load_transcripts
from .retrieve import RetrievalQuery, retrieve_embedding

ADJECTIVES = [
    "Silent", "Crimson", "Hollow", "Golden", "Frozen", "Restless", "Distant", "Broken", "Velvet", "Burning",
    "Quiet", "Wandering", "Hidden", "Iron", "Pale", "Electric", "Sunken", "Wild", "Last", "Amber",
]
NOUNS = [
    "Harbor", "Meadow", "Lantern", "Circuit", "Orchard", "Compass", "Cathedral", "Station", "Garden", "Mirror",
    "Canyon", "Archive", "Engine", "Fortress", "Island", "Signal", "Theater", "Voyage", "Prism", "Citadel",
]
TAILS = [
    "Chronicle", "Requiem", "Sonata", "Protocol", "Affair", "Legacy", "Paradox", "Testament", "Horizon", "Elegy",
    "Gambit", "Rhapsody", "Covenant", "Odyssey", "Verdict", "Nocturne", "Mandate", "Ballad", "Reckoning", "Promise",
]
FIRST = ["Mira", "Tobias", "Ines", "Caspian", "Lotte", "Anselm", "Priya", "Dorian", "Ysolde", "Emeric",
         "Hanne", "Oskar", "Talia", "Rufus", "Selma", "Bastian", "Noor", "Evander", "Greta", "Lucan"]
LAST = ["Vantongeren", "Aldridge", "Okonkwo", "Marchetti", "Lindqvist", "Duarte", "Brennagh", "Szabo",
        "Halvorsen", "Quenneville", "Ravensworth", "Tamboli", "Ashgrove", "Delacroix", "Ferreira", "Kowalczyk",
        "Nakashima", "Oyelaran", "Petrakis", "Strand"]
DIRECTORS = ["Wenzel Achterberg", "Rosalind Quigley", "Matthias Oberholt", "Celestine Varga",
             "Ignatius Bellweather", "Dagny Fjelstad", "Leopold Marchbanks", "Saoirse Dunleavy"]
AWARD_WORDS = ["Aurelian", "Borealis", "Cobalt", "Dunmore", "Equinox", "Foxglove", "Gossamer", "Halcyon",
               "Ilvermorne", "Juniper", "Kestrel", "Larkspur", "Meridian", "Nightjar", "Obsidian", "Peregrine",
               "Quillon", "Rosewater", "Solstice", "Tamarind"]

RELATION_AWARD = "award received"
RELATION_CAST = "cast member"
RELATION_DIRECTOR = "director"


def _films(rng: random.Random) -> list[tuple[str, str, str]]:
    adj, noun, tail = ADJECTIVES[:], NOUNS[:], TAILS[:]
    rng.shuffle(adj)
    rng.shuffle(noun)
    rng.shuffle(tail)
    return list(zip(adj, noun, tail))


def _question(relation: str, film: str, obj: str) -> str:
    if relation == RELATION_AWARD:
        return f"Did {film} receive the {obj}?"
    return f"Is {obj} a cast member of {film}?"


def _hops(kg: KnowledgeGraph, a: str, b: str) -> int | None:
    src, dst = kg.find_entity(a), kg.find_entity(b)
    if src is None or dst is None:
        return None
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            return dist[u]
        for tid in kg.adjacency[u]:
            for v in kg.endpoints[tid]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
    return None


def build(seed: int = 7) -> tuple[list[Triple], list[dict], list[dict]]:
    """Return (triples, records, paraphrased_records) as plain data."""
    rng = random.Random(seed)
    films = _films(rng)
    first, last, awards = FIRST[:], LAST[:], AWARD_WORDS[:]
    rng.shuffle(first)
    rng.shuffle(last)
    rng.shuffle(awards)

    triples, facts = [], []
    for i, (a, n, t) in enumerate(films):
        film = f"The {a} {n} {t}"
        award = f"{awards[i]} Prize"
        actor = f"{first[i]} {last[i]}"
        triples += [
            Triple(film, RELATION_AWARD, award),
            Triple(film, RELATION_DIRECTOR, DIRECTORS[i % len(DIRECTORS)]),
            Triple(film, RELATION_CAST, actor),
        ]
        facts.append((film, (a, n, t), {RELATION_AWARD: award, RELATION_CAST: actor}))
    kg = KnowledgeGraph(triples)

    records, paraphrased = [], []
    n = len(facts)
    for i, (film, (a, nn, t), objs) in enumerate(facts):
        true_rel = RELATION_AWARD if i % 2 == 0 else RELATION_CAST
        false_rel = RELATION_CAST if i % 2 == 0 else RELATION_AWARD
        # a film by the same director, so the wrong object is three hops away
        j = i + len(DIRECTORS) if i + len(DIRECTORS) < n else i - len(DIRECTORS)
        wrong = facts[j][2][false_rel]
        alias = f"the film {a} {nn} {t}"
        for label, rel, obj in (("TPQ", true_rel, objs[true_rel]), ("FPQ", false_rel, wrong)):
            lf = serialize_canonical(LogicalForm(rel.replace(" ", "_"), (film, obj)))
            hops = 1 if label == "TPQ" else _hops(kg, film, obj)
            rid = f"{label.lower()}-{i:02d}"
            base = {"id": rid, "label": label, "hops": hops, "logical_form": lf}
            records.append({**base, "question": _question(rel, film, obj)})
            paraphrased.append({**base, "question": _question(rel, alias, obj)})
    records.sort(key=lambda r: r["id"])
    paraphrased.sort(key=lambda r: r["id"])
    return triples, records, paraphrased


def check_retrieval(triples: list[Triple], records: list[dict], dim: int = 256) -> None:
    """Every logical form must retrieve its own film's triple under ``rel`` first."""
    kg = KnowledgeGraph(triples)
    index = EmbeddingIndex.build(kg, HashingEmbedder(dim))
    for rec in records:
        text = rec["logical_form"]
        top = retrieve_embedding(RetrievalQuery("logical_form", text), kg, index, k=1).evidence[0]
        rel = text.split("(", 1)[0].replace("_", " ")
        film = text.split('"')[1]
        if top.subject != film or top.relation != rel:
            raise AssertionError(f"{rec['id']}: retrieved {top} for {text}")


def _dump_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def record_transcripts(kg: KnowledgeGraph, datasets: list[list[DatasetRecord]], dim: int = 256) -> RecordingChat:
    """Replay the bundled experiments against the oracle and keep every exchange."""
    from .evaluation import run_detection_eval, run_mitigation_eval
    from .mitigate import MitigationStrategy
    from .oracle import OracleChat
    from .verdict import DetectionConfig

    table = {r.question: r.meta["logical_form"] for ds in datasets for r in ds}
    rec = RecordingChat(OracleChat(table))
    index = EmbeddingIndex.build(kg, HashingEmbedder(dim))
    for ds in datasets:
        for mode in ("both", "retrieval_only", "none"):
            cfg = DetectionConfig(retriever="embedding", lf_mode=mode)
            run_detection_eval(cfg, ds, kg, index, rec)
        cfg = DetectionConfig(retriever="embedding", lf_mode="both")
        for kind in ("direct_ask", "premise_informed"):
            run_mitigation_eval(MitigationStrategy(kind), ds, kg, index, rec, cfg)
    return rec


def write_bundle(out_dir: str | Path, seed: int = 7) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    triples, records, paraphrased = build(seed)
    check_retrieval(triples, records)
    _dump_jsonl(out / "kg.jsonl", ({"subject": t.subject, "relation": t.relation, "object": t.object}
                                   for t in triples))
    _dump_jsonl(out / "records.jsonl", records)
    _dump_jsonl(out / "records_paraphrased.jsonl", paraphrased)
    kg = load_triples(out / "kg.jsonl")
    datasets = [load_dataset(out / name, "generic").records
                for name in ("records.jsonl", "records_paraphrased.jsonl")]
    record_transcripts(kg, datasets).dump(out / "transcripts.jsonl")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("premiseguard.data").joinpath(name)))


def load_bundled(name: str = "records.jsonl"):
    """(graph, dataset, transcripts) of the bundled synthetic benchmark."""
    root = bundled_path("synthetic")
    return (
        load_triples(root / "kg.jsonl"),
        load_dataset(root / name, "generic"),
        load_transcripts(root / "transcripts.jsonl"),
    )
