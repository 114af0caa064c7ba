import random

import numpy as np
import pytest

from oracles import brute_force_pcst
from premiseguard import (
    EmbeddingIndex,
    EmptyGraph,
    HashingEmbedder,
    KnowledgeGraph,
    PCSTParams,
    RetrievalQuery,
    ScriptedChat,
    Triple,
    assign_prizes,
    retrieve_embedding,
    retrieve_llm_scored,
    retrieve_pcst,
    solve_pcst,
)
from premiseguard.logiform import parse_logical_form
from premiseguard.providers import mock_embed
from premiseguard.retrieve import PrizeAssignment, parse_score, pcst_objective, scoring_prompt, score_prompt_template


def _kg(triples):
    kg = KnowledgeGraph(Triple(*t) for t in triples)
    return kg, EmbeddingIndex.build(kg, HashingEmbedder())


TOY = [
    ("The Dark Knight", "award received", "81st Academy Awards"),
    ("The Dark Knight", "director", "Christopher Nolan"),
    ("The Dark Knight", "cast member", "Heath Ledger"),
    ("Inception", "director", "Christopher Nolan"),
    ("Inception", "cast member", "Elliot Page"),
    ("Heath Ledger", "award received", "81st Academy Awards"),
    ("Memento", "director", "Christopher Nolan"),
    ("Memento", "cast member", "Guy Pearce"),
    ("Inglourious Basterds", "director", "Quentin Tarantino"),
    ("Inglourious Basterds", "award received", "16th Screen Actors Guild Awards"),
]


def _scan(kg, text):
    q = mock_embed(text)
    scores = [float(q @ mock_embed(t.text())) for t in kg.triples]
    return sorted(range(len(kg)), key=lambda i: (-scores[i], i)), scores


def test_exact_text_scores_one():
    kg, index = _kg(TOY)
    r = retrieve_embedding(RetrievalQuery.original(kg.triples[3].text()), kg, index, 1)
    assert r.triple_ids == [3] and abs(r.scores[0] - 1.0) < 1e-9
    assert r.retriever == "embedding" and r.query_mode == "original"


@pytest.mark.parametrize("text", ["who directed Inception", "Heath Ledger award", "Guy Pearce memento cast",
                                  "zzz unrelated words"])
def test_top1_matches_exhaustive_scan(text):
    kg, index = _kg(TOY)
    order, _ = _scan(kg, text)
    assert retrieve_embedding(RetrievalQuery.original(text), kg, index, 1).triple_ids == order[:1]


def test_full_k_is_sorted_permutation():
    kg, index = _kg(TOY)
    order, scores = _scan(kg, "Christopher Nolan director")
    r = retrieve_embedding(RetrievalQuery.original("Christopher Nolan director"), kg, index, len(kg))
    assert r.triple_ids == order
    assert np.allclose(r.scores, [scores[i] for i in order])


def test_dark_knight_logical_form_retrieval():
    kg, index = _kg(TOY[:3] + [TOY[8]])
    lf = parse_logical_form("is_a_recipient_of('The Dark Knight', '16th Screen Actors Guild Awards')")
    r = retrieve_embedding(RetrievalQuery.from_logical_form(lf), kg, index, 1)
    assert r.evidence == [Triple("The Dark Knight", "award received", "81st Academy Awards")]
    assert r.query_mode == "logical_form"


def test_empty_graph_errors():
    kg, index = _kg([])
    rq = RetrievalQuery.original("x")
    with pytest.raises(EmptyGraph):
        retrieve_embedding(rq, kg, index)
    with pytest.raises(EmptyGraph):
        retrieve_pcst(rq, kg, index)
    with pytest.raises(EmptyGraph):
        assign_prizes(kg, rq, index)
    with pytest.raises(EmptyGraph):
        retrieve_llm_scored(rq, kg, ScriptedChat({}), index)


def test_k_zero():
    kg, index = _kg(TOY)
    assert retrieve_embedding(RetrievalQuery.original("x"), kg, index, 0).evidence == []


def test_prize_rank_formula():
    kg, index = _kg([("a", "r", "b"), ("b", "r", "c")])
    pa = assign_prizes(kg, RetrievalQuery.original("a"), index, k_nodes=2, k_edges=1, edge_cost=1.0)
    assert sorted(pa.node_prize, reverse=True) == [2.0, 1.0, 0.0]
    assert pa.node_prize[kg.find_entity("a")] == 2.0
    assert sorted(pa.edge_prize) == [0.0, 1.0]


def test_prize_ties_break_by_id():
    kg, index = _kg([("a", "r", "b"), ("b", "r", "c")])
    pa = assign_prizes(kg, RetrievalQuery.original("unrelated"), index, k_nodes=2, k_edges=2, edge_cost=1.0)
    assert pa.node_prize == (2.0, 1.0, 0.0)
    assert pa.edge_prize == (2.0, 1.0)


def test_prizes_match_independent_sort():
    kg, index = _kg(TOY)
    text = "Nolan film awards"
    q = mock_embed(text)
    ent = sorted(range(kg.num_entities), key=lambda e: (-float(q @ mock_embed(kg.entities[e])), e))
    pa = assign_prizes(kg, RetrievalQuery.original(text), index, k_nodes=4, k_edges=3, edge_cost=0.5)
    expected = [0.0] * kg.num_entities
    for rank, e in enumerate(ent[:4]):
        expected[e] = 4.0 - rank
    assert list(pa.node_prize) == expected
    order, _ = _scan(kg, text)
    exp_e = [0.0] * len(kg)
    for rank, t in enumerate(order[:3]):
        exp_e[t] = 3.0 - rank
    assert list(pa.edge_prize) == exp_e


def test_prize_validation():
    with pytest.raises(ValueError):
        PrizeAssignment((1.0,), (), 0.0)
    with pytest.raises(ValueError):
        PrizeAssignment((-1.0,), (), 1.0)


def test_solve_pcst_on_graph_matches_brute_force():
    kg, index = _kg(TOY)
    pa = assign_prizes(kg, RetrievalQuery.original("The Dark Knight award received"), index, 4, 4, 0.5)
    sub = solve_pcst(kg, pa)
    best, _ = brute_force_pcst(kg.num_entities, kg.endpoints, pa.node_prize, pa.edge_prize, pa.edge_cost)
    assert pcst_objective(kg, pa, sub) >= 0.5 * best
    assert set(sub.node_ids) == {v for t in sub.triple_ids for v in kg.endpoints[t]} or not sub.triple_ids


def test_retrieve_pcst_is_composition():
    kg, index = _kg(TOY)
    rq = RetrievalQuery.original("Christopher Nolan director Inception")
    params = PCSTParams(k_nodes=3, k_edges=3, edge_cost=0.5)
    r = retrieve_pcst(rq, kg, index, params)
    sub = solve_pcst(kg, assign_prizes(kg, rq, index, 3, 3, 0.5))
    assert set(r.triple_ids) == set(sub.triple_ids)
    assert r.subgraph == sub and r.retriever == "pcst"
    _, scores = _scan(kg, rq.text)
    assert r.scores == sorted(r.scores, reverse=True)
    assert np.allclose(r.scores, [scores[i] for i in r.triple_ids])


def test_retrieve_pcst_single_triple():
    kg, index = _kg([("a", "r", "b")])
    r = retrieve_pcst(RetrievalQuery.original("a r b"), kg, index)
    assert r.triple_ids == [0]


def test_retrieve_pcst_lone_node_falls_back_to_incident_triple():
    kg, index = _kg([("a", "r", "b")])
    r = retrieve_pcst(RetrievalQuery.original("a"), kg, index, PCSTParams(k_nodes=1, k_edges=1, edge_cost=100.0))
    assert r.subgraph.triple_ids == () and r.triple_ids == [0]


def test_parse_score():
    assert parse_score("about 85 out of 100") == 85
    assert parse_score("Score: 250") == 100
    assert parse_score("-5") == 0
    assert parse_score("no number") is None
    assert parse_score("07") == 7


def test_parse_score_against_scan():
    rng = random.Random(3)
    alphabet = "ab -:.0123456789"
    for _ in range(500):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
        # independent reference: split on non-digits
        runs = "".join(c if c.isdigit() else " " for c in s).split()
        if not runs:
            assert parse_score(s) is None
            continue
        first = runs[0]
        start = s.index(first)
        want = 0 if start > 0 and s[start - 1] == "-" else min(100, int(first))
        assert parse_score(s) == want


def test_scoring_prompt_asset():
    tpl = score_prompt_template()
    assert "[query]" in tpl and "[triple]" in tpl and "0 and 100" in tpl
    p = scoring_prompt("Q", Triple("a", "r", "b"))
    assert "Q" in p and "['a', 'r', 'b']" in p


def _scored_chat(kg, text, scores):
    return ScriptedChat({scoring_prompt(text, t): str(s) for t, s in zip(kg.triples, scores)})


def test_llm_scored_gold_first():
    kg, index = _kg(TOY[:5])
    rq = RetrievalQuery.original("does The Dark Knight have an award")
    chat = _scored_chat(kg, rq.text, [100, 10, 10, 10, 10])
    r = retrieve_llm_scored(rq, kg, chat, index, k=1, candidate_cap=20)
    assert r.triple_ids == [0] and r.scores == [100.0] and r.retriever == "llm_scored"


def test_llm_scored_ties_by_id_and_bad_replies():
    kg, index = _kg(TOY[:3])
    rq = RetrievalQuery.original("The Dark Knight")
    chat = ScriptedChat({scoring_prompt(rq.text, kg.triples[0]): "50",
                         scoring_prompt(rq.text, kg.triples[1]): "fifty",
                         scoring_prompt(rq.text, kg.triples[2]): "50/100"})
    r = retrieve_llm_scored(rq, kg, chat, index, k=3, candidate_cap=20, max_workers=1)
    assert r.triple_ids == [0, 2, 1] and r.scores == [50.0, 50.0, 0.0]


def test_llm_scored_logical_form_candidates():
    kg, index = _kg(TOY)
    lf = parse_logical_form("won('Memento', 'Some Award')")
    rq = RetrievalQuery.from_logical_form(lf)

    class Scorer(ScriptedChat):
        def __init__(self):
            super().__init__({})
            self.prompts = []

        def _send(self, req):
            self.prompts.append(req.prompt)
            return "10"

    chat = Scorer()
    r = retrieve_llm_scored(rq, kg, chat, index, k=2, candidate_cap=2, max_workers=1)
    assert len(chat.prompts) == 2 and all("Memento" in t.subject for t in r.evidence)
