import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from premiseguard import (
    EmbeddingIndex,
    FormatError,
    HashingEmbedder,
    KnowledgeGraph,
    NoCandidates,
    Triple,
    candidate_triples,
    link_entity,
    load_triples,
    normalize_surface,
)
from premiseguard.logiform import TripleQuery
from premiseguard.providers import mock_embed


def _jsonl(*triples):
    return [json.dumps({"subject": s, "relation": r, "object": o}) + "\n" for s, r, o in triples]


def test_load_dedups():
    kg = load_triples(_jsonl(("a", "r", "b"), ("b", "r", "c"), ("A ", "r", "b")))
    assert len(kg) == 2
    assert kg.stats() == {"triples": 2, "entities": 3, "relations": 1}


def test_load_case_study_record():
    kg = load_triples(['{"subject":"The Dark Knight","relation":"award received","object":"81st Academy Awards"}'])
    assert kg.triples == [Triple("The Dark Knight", "award received", "81st Academy Awards")]


def test_load_empty():
    kg = load_triples([])
    assert len(kg) == 0 and kg.num_entities == 0


def test_load_tsv_and_file(tmp_path):
    p = tmp_path / "kg.tsv"
    p.write_text("a\tr\tb\n\nb\tr2\tc\n", encoding="utf-8")
    kg = load_triples(p)
    assert [t.as_list() for t in kg.triples] == [["a", "r", "b"], ["b", "r2", "c"]]


@pytest.mark.parametrize("lines,lineno", [
    (['{"subject": "a", "relation": "r", "object": "b"}', '{"subject": "a"}'], 2),
    (["a\tr\tb", "a\tr"], 2),
    (['{"subject": "a", "relation": "r", "object": "b"}', "{not json"], 2),
    (['{"subject": "", "relation": "r", "object": "b"}'], 1),
])
def test_load_format_errors(lines, lineno):
    with pytest.raises(FormatError) as ei:
        load_triples(lines)
    assert ei.value.line == lineno


def test_load_twice_identical():
    lines = _jsonl(("x", "r", "y"), ("y", "s", "z"), ("z", "r", "x"))
    a, b = load_triples(lines), load_triples(lines)
    assert a.triples == b.triples and a.entities == b.entities
    assert a.entity_index == b.entity_index and a.adjacency == b.adjacency


def test_normalize_examples():
    assert normalize_surface('"The Dark Knight"') == "the dark knight"
    assert normalize_surface("  Academy   Award ") == "academy award"
    assert normalize_surface("Ｃafé") == normalize_surface("Ｃafé")


@given(st.text(max_size=40))
def test_normalize_idempotent(s):
    once = normalize_surface(s)
    assert normalize_surface(once) == once


@given(st.lists(st.tuples(*[st.sampled_from("abcdeABC") for _ in range(3)]), max_size=15))
def test_adjacency_is_incidence(rows):
    kg = KnowledgeGraph(Triple(s, r, o) for s, r, o in rows)
    for eid in range(kg.num_entities):
        for tid in kg.adjacency[eid]:
            assert eid in kg.endpoints[tid]
    for tid, (s, o) in enumerate(kg.endpoints):
        assert tid in kg.adjacency[s] and tid in kg.adjacency[o]
        assert kg.find_entity(kg.triples[tid].subject) == s


def _toy():
    kg = KnowledgeGraph([
        Triple("The Dark Knight", "award received", "81st Academy Awards"),
        Triple("The Dark Knight", "director", "Christopher Nolan"),
        Triple("Inception", "director", "Christopher Nolan"),
        Triple("Heath Ledger", "award received", "81st Academy Awards"),
        Triple("Memento", "cast member", "Guy Pearce"),
    ])
    return kg, EmbeddingIndex.build(kg, HashingEmbedder())


def test_link_exact():
    kg, index = _toy()
    cands = link_entity(kg, "the dark knight", index, 3)
    assert cands[0] == (kg.find_entity("The Dark Knight"), 1.0)
    assert len(cands) == 3


def test_link_fallback_is_cosine_argmax():
    kg, index = _toy()
    surface = "Nolan Christopher films"
    q = mock_embed(surface)
    oracle = sorted(range(kg.num_entities), key=lambda e: (-float(q @ mock_embed(kg.entities[e])), e))
    got = link_entity(kg, surface, index, 2)
    assert [e for e, _ in got] == oracle[:2]
    assert kg.entities[got[0][0]] == "Christopher Nolan"


def test_link_empty_graph():
    kg = KnowledgeGraph()
    with pytest.raises(NoCandidates):
        link_entity(kg, "x", EmbeddingIndex.build(kg, HashingEmbedder()), 3)


def test_candidates_dark_knight():
    kg, index = _toy()
    tq = TripleQuery("The Dark Knight", "is_a_recipient_of", "16th Screen Actors Guild Awards")
    cands = candidate_triples(kg, tq, index, 20)
    assert Triple("The Dark Knight", "award received", "81st Academy Awards") in cands
    assert candidate_triples(kg, tq, index, 0) == []


def test_candidates_match_brute_force_incidence():
    kg, index = _toy()
    tq = TripleQuery("Inception", "director", None)
    linked = [e for e, _ in link_entity(kg, "Inception", index, 3)]
    expected = {t for t in kg.triples
                if kg.find_entity(t.subject) in linked or kg.find_entity(t.object) in linked}
    got = candidate_triples(kg, tq, index, 20)
    assert set(got) == expected
    assert set(got) <= set(kg.triples)
    assert got == candidate_triples(kg, tq, index, 20)
    assert got[0].subject == "Inception"
