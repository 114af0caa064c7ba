"""Query augmentation and the answer-generation strategies compared against it."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Literal

from .errors import AllVotesUnparseable, UnparseableVerdict
from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph
from .providers import ChatProvider
from .retrieve import RetrievalQuery
from .verdict import DetectionConfig, Verdict, detect, format_context, parse_yes_no, run_retriever

log = logging.getLogger(__name__)

FALSE_PREMISE_NOTE = "Note: This question contains a false premise."
WARNING_PREFIX = "This question may contain a false premise."
# as printed in the original baseline description, typo included
WARNING_PREFIX_VERBATIM = "This question may contain a fasle premise."
RAG_TEMPLATE = (
    "Answer the question using the context below. The context is provided as valid facts in a triple.\n"
    "Context: [context]\nQuestion: [query]"
)
DEFAULT_VOTES = 3
VOTE_TEMPERATURE = 0.7

StrategyKind = Literal["direct_ask", "prompt_warning", "majority_vote", "direct_rag", "premise_informed"]
STRATEGIES = ("direct_ask", "prompt_warning", "majority_vote", "direct_rag", "premise_informed")


@dataclass(frozen=True)
class MitigationStrategy:
    kind: StrategyKind = "premise_informed"
    votes: int = DEFAULT_VOTES
    vote_temperature: float = VOTE_TEMPERATURE
    verbatim_paper_prompts: bool = False

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.kind == "majority_vote" and (self.votes < 3 or self.votes % 2 == 0):
            raise ValueError("majority_vote needs an odd number of votes >= 3")


@dataclass
class AnsweredQuery:
    final_query: str
    answer_text: str
    # None when the answer is neither a yes nor a no
    graded_yes: bool | None
    verdict: Verdict | None = None
    votes: list[str] = field(default_factory=list)

    @property
    def unparseable(self) -> bool:
        return self.graded_yes is None


def augment_query(q: str, verdict: Verdict) -> str:
    if verdict.is_false_premise:
        return f"{q} {FALSE_PREMISE_NOTE}"
    return q


def _yes(text: str) -> bool | None:
    try:
        return parse_yes_no(text)
    except UnparseableVerdict:
        return None


def answer(strategy: MitigationStrategy, q: str, provider: ChatProvider, kg: KnowledgeGraph | None = None,
           index: EmbeddingIndex | None = None, det_cfg: DetectionConfig | None = None) -> AnsweredQuery:
    kind = strategy.kind
    if kind in ("direct_rag", "premise_informed") and (kg is None or index is None):
        raise ValueError(f"{kind} needs a graph and an index")
    det_cfg = det_cfg or DetectionConfig()

    if kind == "direct_ask":
        final = q
    elif kind == "prompt_warning":
        prefix = WARNING_PREFIX_VERBATIM if strategy.verbatim_paper_prompts else WARNING_PREFIX
        final = f"{prefix} {q}"
    elif kind == "direct_rag":
        rcfg = det_cfg if det_cfg.retriever != "direct" else DetectionConfig(retriever="embedding", lf_mode="none")
        evidence = run_retriever(rcfg, RetrievalQuery.original(q), kg, index, provider)
        final = RAG_TEMPLATE.replace("[context]", format_context(evidence)).replace("[query]", q)
    elif kind == "premise_informed":
        verdict = detect(q, kg, index, provider, det_cfg)
        final = augment_query(q, verdict)
        text = provider.complete(final)
        return AnsweredQuery(final, text, _yes(text), verdict=verdict)
    else:
        final = q  # majority_vote

    if kind != "majority_vote":
        text = provider.complete(final)
        return AnsweredQuery(final, text, _yes(text))

    votes = [provider.complete(final, temperature=strategy.vote_temperature, nonce=i)
             for i in range(strategy.votes)]
    parsed = [(v, _yes(v)) for v in votes]
    valid = [(v, y) for v, y in parsed if y is not None]
    if not valid:
        raise AllVotesUnparseable(f"none of {len(votes)} votes was a yes/no answer")
    tally = Counter(y for _, y in valid)
    if tally[True] == tally[False]:
        return AnsweredQuery(final, valid[0][0], None, votes=votes)
    winner = tally[True] > tally[False]
    text = next(v for v, y in valid if y == winner)
    return AnsweredQuery(final, text, winner, votes=votes)


def grade_answer(answer_text: str, label: Literal["TPQ", "FPQ"]) -> bool:
    """TPQ is answered correctly by a yes, FPQ by a no; anything else is wrong."""
    if label not in ("TPQ", "FPQ"):
        raise ValueError(f"unknown label {label!r}")
    said_yes = _yes(answer_text)
    if said_yes is None:
        return False
    return said_yes if label == "TPQ" else not said_yes


def is_gradable(answer_text: str) -> bool:
    return _yes(answer_text) is not None
