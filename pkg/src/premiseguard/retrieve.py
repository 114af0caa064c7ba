"""Graph retrievers: embedding top-k, prize-collecting Steiner tree, LLM-scored."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Literal

import numpy as np

from .errors import EmptyGraph
from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph, Subgraph, Triple, scored_candidates
from .logiform import LogicalForm, TripleQuery, serialize_canonical, to_triple_query
from .pcst import solve_pcst as _solve
from .providers import ChatProvider

log = logging.getLogger(__name__)

QueryMode = Literal["original", "logical_form"]
RetrieverName = Literal["embedding", "pcst", "llm_scored"]

DEFAULT_K = 1
DEFAULT_EDGE_COST = 0.5
DEFAULT_K_NODES = 4
DEFAULT_K_EDGES = 4
DEFAULT_CANDIDATE_CAP = 20


@dataclass(frozen=True)
class RetrievalQuery:
    mode: QueryMode
    text: str
    triple_query: TripleQuery | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("retrieval text must be non-empty")
        if self.mode not in ("original", "logical_form"):
            raise ValueError(f"unknown query mode {self.mode!r}")

    @classmethod
    def original(cls, question: str) -> RetrievalQuery:
        return cls("original", question)

    @classmethod
    def from_logical_form(cls, lf: LogicalForm) -> RetrievalQuery:
        return cls("logical_form", serialize_canonical(lf), to_triple_query(lf))


@dataclass
class RetrievalResult:
    evidence: list[Triple]
    scores: list[float]
    triple_ids: list[int]
    retriever: RetrieverName
    query_mode: QueryMode
    subgraph: Subgraph | None = None

    def to_json(self) -> dict:
        out = {
            "retriever": self.retriever,
            "query_mode": self.query_mode,
            "triples": [t.as_list() for t in self.evidence],
            "scores": [float(s) for s in self.scores],
            "triple_ids": list(self.triple_ids),
        }
        if self.subgraph is not None:
            out["nodes"] = list(self.subgraph.node_ids)
        return out


@dataclass(frozen=True)
class PrizeAssignment:
    node_prize: tuple[float, ...]
    edge_prize: tuple[float, ...]
    edge_cost: float

    def __post_init__(self):
        if self.edge_cost <= 0:
            raise ValueError("edge_cost must be positive")
        if min(self.node_prize, default=0) < 0 or min(self.edge_prize, default=0) < 0:
            raise ValueError("prizes must be nonnegative")


@dataclass(frozen=True)
class PCSTParams:
    k_nodes: int = DEFAULT_K_NODES
    k_edges: int = DEFAULT_K_EDGES
    edge_cost: float = DEFAULT_EDGE_COST


# cosines equal up to float noise count as ties and fall back to triple id
_TIE_DIGITS = 12


def _ranked(scores: np.ndarray) -> list[int]:
    return sorted(range(len(scores)), key=lambda i: (-round(float(scores[i]), _TIE_DIGITS), i))


def _result(kg, ids, scores, retriever, mode, subgraph=None) -> RetrievalResult:
    return RetrievalResult(
        evidence=[kg.triples[i] for i in ids],
        scores=[float(scores[i]) for i in ids],
        triple_ids=list(ids),
        retriever=retriever,
        query_mode=mode,
        subgraph=subgraph,
    )


def retrieve_embedding(rq: RetrievalQuery, kg: KnowledgeGraph, index: EmbeddingIndex,
                       k: int = DEFAULT_K) -> RetrievalResult:
    """Top-k triples by cosine between the query text and ``s | r | o`` text."""
    if not len(kg):
        raise EmptyGraph("cannot retrieve from an empty graph")
    if k < 0:
        raise ValueError("k must be >= 0")
    scores = index.triple_scores(index.embed_query(rq.text))
    return _result(kg, _ranked(scores)[:k], scores, "embedding", rq.mode)


def assign_prizes(kg: KnowledgeGraph, rq: RetrievalQuery, index: EmbeddingIndex,
                  k_nodes: int = DEFAULT_K_NODES, k_edges: int = DEFAULT_K_EDGES,
                  edge_cost: float = DEFAULT_EDGE_COST) -> PrizeAssignment:
    """Rank-based prizes: the i-th most similar entity (0-based) gets ``k_nodes - i``,
    likewise for triples with ``k_edges``; everything else gets 0."""
    if not len(kg):
        raise EmptyGraph("cannot assign prizes on an empty graph")
    if k_nodes < 1 or k_edges < 1:
        raise ValueError("k_nodes and k_edges must be >= 1")
    q = index.embed_query(rq.text)
    node_prize = [0.0] * kg.num_entities
    for rank, eid in enumerate(_ranked(index.entity_scores(q))[:k_nodes]):
        node_prize[eid] = float(k_nodes - rank)
    edge_prize = [0.0] * len(kg)
    for rank, tid in enumerate(_ranked(index.triple_scores(q))[:k_edges]):
        edge_prize[tid] = float(k_edges - rank)
    return PrizeAssignment(tuple(node_prize), tuple(edge_prize), edge_cost)


def pcst_objective(kg: KnowledgeGraph, pa: PrizeAssignment, sub: Subgraph) -> float:
    return sum(pa.node_prize[v] for v in sub.node_ids) + sum(
        pa.edge_prize[e] - pa.edge_cost for e in sub.triple_ids
    )


def solve_pcst(kg: KnowledgeGraph, pa: PrizeAssignment) -> Subgraph:
    if not len(kg):
        raise EmptyGraph("cannot solve PCST on an empty graph")
    sol = _solve(kg.num_entities, kg.endpoints, pa.node_prize, pa.edge_prize, pa.edge_cost)
    return kg.subgraph(sol.edges, sol.nodes)


def retrieve_pcst(rq: RetrievalQuery, kg: KnowledgeGraph, index: EmbeddingIndex,
                  params: PCSTParams = PCSTParams()) -> RetrievalResult:
    """Prize assignment, then PCST; evidence is the tree's triples by cosine.

    A tree that is a single node carries no triple, so the best-scoring triple
    incident to that node stands in as evidence.
    """
    pa = assign_prizes(kg, rq, index, params.k_nodes, params.k_edges, params.edge_cost)
    sub = solve_pcst(kg, pa)
    scores = index.triple_scores(index.embed_query(rq.text))
    ids = list(sub.triple_ids)
    if not ids:
        incident = kg.adjacency[sub.node_ids[0]]
        if incident:
            ids = [min(incident, key=lambda t: (-float(scores[t]), t))]
            log.debug("PCST returned a lone node; using incident triple %d", ids[0])
    ids.sort(key=lambda t: (-float(scores[t]), t))
    return _result(kg, ids, scores, "pcst", rq.mode, sub)


def score_prompt_template() -> str:
    return resources.files("premiseguard.prompts").joinpath("llm_score_v1.txt").read_text(encoding="utf-8")


def scoring_prompt(query_text: str, triple: Triple) -> str:
    return score_prompt_template().replace("[query]", query_text).replace("[triple]", triple.bracketed())


def parse_score(text: str) -> int | None:
    """First run of digits in ``text`` clipped to [0, 100]; None if there is none."""
    digits = []
    negative = False
    for i, ch in enumerate(text):
        if "0" <= ch <= "9":
            if not digits:
                negative = i > 0 and text[i - 1] == "-"
            digits.append(ch)
        elif digits:
            break
    if not digits:
        return None
    return 0 if negative else min(100, int("".join(digits)))


def retrieve_llm_scored(rq: RetrievalQuery, kg: KnowledgeGraph, provider: ChatProvider,
                        index: EmbeddingIndex, k: int = DEFAULT_K,
                        candidate_cap: int = DEFAULT_CANDIDATE_CAP,
                        max_workers: int = 4) -> RetrievalResult:
    """Score each candidate triple 0-100 with one chat call and keep the top k.

    Candidates are triples incident to the linked source/target entities when
    the query came from a logical form, otherwise the ``candidate_cap`` most
    cosine-similar triples.
    """
    if not len(kg):
        raise EmptyGraph("cannot retrieve from an empty graph")
    if rq.triple_query is not None:
        cand = [tid for tid, _ in scored_candidates(kg, rq.triple_query, index, candidate_cap)]
    else:
        cand = _ranked(index.triple_scores(index.embed_query(rq.text)))[:candidate_cap]

    def score(tid: int) -> float:
        reply = provider.complete(scoring_prompt(rq.text, kg.triples[tid]))
        val = parse_score(reply)
        if val is None:
            log.warning("unparseable helpfulness score %r for triple %d; using 0", reply, tid)
            return 0.0
        return float(val)

    if max_workers > 1 and len(cand) > 1:
        with ThreadPoolExecutor(max_workers=min(max_workers, len(cand))) as pool:
            vals = list(pool.map(score, cand))
    else:
        vals = [score(t) for t in cand]
    by_id = dict(zip(cand, vals))
    ranked = sorted(cand, key=lambda t: (-by_id[t], t))[:k]
    return RetrievalResult(
        evidence=[kg.triples[t] for t in ranked],
        scores=[by_id[t] for t in ranked],
        triple_ids=ranked,
        retriever="llm_scored",
        query_mode=rq.mode,
    )
