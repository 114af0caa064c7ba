"""False-premise verdicts from retrieved evidence (or from the model alone)."""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass, field
from typing import Literal

from .errors import MissingComponent, ParseError, UnparseableVerdict
from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph
from .logiform import Component, LogicalForm, extract_logical_form, mask_component, serialize_canonical
from .providers import ChatProvider
from .retrieve import (
    DEFAULT_CANDIDATE_CAP,
    DEFAULT_K,
    PCSTParams,
    RetrievalQuery,
    RetrievalResult,
    retrieve_embedding,
    retrieve_llm_scored,
    retrieve_pcst,
)

log = logging.getLogger(__name__)

DIRECT_PROMPT = "Does the following question contain a false premise? Answer with 'Yes' or 'No' only."
DETECTION_TEMPLATE = (
    "Given the context below, does the following question contain a false premise? "
    "Answer with 'Yes' or 'No' only. Note that the context is provided as valid facts in a triple. "
    "Context: [context]. Query: [query]."
)

Retriever = Literal["direct", "embedding", "pcst", "llm_scored"]
LFMode = Literal["none", "retrieval_only", "both"]
RETRIEVERS = ("direct", "embedding", "pcst", "llm_scored")
LF_MODES = ("none", "retrieval_only", "both")


@dataclass(frozen=True)
class DetectionConfig:
    retriever: Retriever = "embedding"
    lf_mode: LFMode = "both"
    k: int = DEFAULT_K
    pcst: PCSTParams = field(default_factory=PCSTParams)
    candidate_cap: int = DEFAULT_CANDIDATE_CAP
    # ablation: hide one logical-form component before retrieval/detection
    mask: Component | None = None

    def __post_init__(self):
        if self.retriever not in RETRIEVERS:
            raise ValueError(f"unknown retriever {self.retriever!r}")
        if self.lf_mode not in LF_MODES:
            raise ValueError(f"unknown lf_mode {self.lf_mode!r}")
        if self.retriever == "direct" and self.lf_mode == "retrieval_only":
            raise ValueError("direct claim has no retrieval stage; use lf_mode none or both")
        if self.k < 0 or self.candidate_cap < 0:
            raise ValueError("k and candidate_cap must be >= 0")
        if self.mask is not None and self.mask not in ("relation", "entity1", "entity2"):
            raise ValueError(f"unknown mask component {self.mask!r}")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class Verdict:
    is_false_premise: bool
    evidence: RetrievalResult | None
    raw_response: str
    config: DetectionConfig
    query_text: str = ""
    logical_form: LogicalForm | None = None
    # lf extraction failed and the record fell back to lf_mode none
    degraded: bool = False
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "is_false_premise": self.is_false_premise,
            "raw_response": self.raw_response,
            "query_text": self.query_text,
            "logical_form": serialize_canonical(self.logical_form) if self.logical_form else None,
            "evidence": self.evidence.to_json() if self.evidence else None,
            "config": self.config.to_json(),
            "degraded": self.degraded,
            "notes": list(self.notes),
        }


_FIRST_WORD = re.compile(r"[^\W\d_]+")


def parse_yes_no(text: str) -> bool:
    m = _FIRST_WORD.search(text.casefold())
    word = m.group(0) if m else ""
    # only punctuation/space may precede the first word
    if m and text.casefold()[: m.start()].strip(" \t\r\n\"'*`.,:;!?()[]-"):
        word = ""
    if word == "yes":
        return True
    if word == "no":
        return False
    raise UnparseableVerdict(text)


def direct_prompt(query: str) -> str:
    return f"{DIRECT_PROMPT}\n{query}"


def format_context(evidence: RetrievalResult | None) -> str:
    if evidence is None:
        return ""
    return "\n".join(t.bracketed() for t in evidence.evidence)


def detection_prompt(subject_text: str, evidence: RetrievalResult | None) -> str:
    return DETECTION_TEMPLATE.replace("[context]", format_context(evidence)).replace("[query]", subject_text)


def detect_direct(query: str, provider: ChatProvider, config: DetectionConfig | None = None) -> Verdict:
    cfg = config or DetectionConfig(retriever="direct", lf_mode="none")
    raw = provider.complete(direct_prompt(query))
    return Verdict(parse_yes_no(raw), None, raw, cfg, query_text=query)


def detect_with_evidence(subject_text: str, evidence: RetrievalResult, provider: ChatProvider,
                         config: DetectionConfig | None = None) -> Verdict:
    cfg = config or DetectionConfig()
    raw = provider.complete(detection_prompt(subject_text, evidence))
    return Verdict(parse_yes_no(raw), evidence, raw, cfg, query_text=subject_text)


def run_retriever(cfg: DetectionConfig, rq: RetrievalQuery, kg: KnowledgeGraph, index: EmbeddingIndex,
                  provider: ChatProvider) -> RetrievalResult:
    if cfg.retriever == "embedding":
        return retrieve_embedding(rq, kg, index, cfg.k)
    if cfg.retriever == "pcst":
        return retrieve_pcst(rq, kg, index, cfg.pcst)
    if cfg.retriever == "llm_scored":
        return retrieve_llm_scored(rq, kg, provider, index, cfg.k, cfg.candidate_cap)
    raise ValueError(f"retriever {cfg.retriever!r} has no retrieval stage")


def detect(q: str, kg: KnowledgeGraph | None, index: EmbeddingIndex | None, provider: ChatProvider,
           cfg: DetectionConfig) -> Verdict:
    """Full detection pipeline for one question.

    The logical form is extracted unless ``lf_mode`` is ``none``. It drives
    retrieval for ``retrieval_only`` and ``both``, and replaces the question
    in the detection prompt for ``both``. An unparseable extraction falls back
    to ``lf_mode`` none for this question and marks the verdict degraded.

    Raises:
        UnparseableVerdict: the final yes/no answer could not be read.
    """
    notes: list[str] = []
    lf = None
    degraded = False
    if cfg.lf_mode != "none":
        try:
            lf = extract_logical_form(q, provider)
        except ParseError as exc:
            log.warning("logical form extraction failed for %r; using the question instead", q)
            notes.append(f"lf extraction failed: {exc}")
            degraded = True
    if lf is not None and cfg.mask is not None:
        try:
            lf = mask_component(lf, cfg.mask)
        except MissingComponent:
            # the form already lacks that component, so it is evaluated as is
            log.warning("%s absent from %s; nothing to mask", cfg.mask, lf)
            notes.append(f"MissingComponent: {cfg.mask}")

    use_lf = lf is not None
    show_lf = use_lf and cfg.lf_mode == "both"
    subject = serialize_canonical(lf) if show_lf else q

    if cfg.retriever == "direct":
        v = detect_direct(subject, provider, cfg)
    else:
        if kg is None or index is None:
            raise ValueError(f"retriever {cfg.retriever!r} needs a graph and an index")
        rq = RetrievalQuery.from_logical_form(lf) if use_lf else RetrievalQuery.original(q)
        evidence = run_retriever(cfg, rq, kg, index, provider)
        v = detect_with_evidence(subject, evidence, provider, cfg)
    v.logical_form = lf
    v.degraded = degraded
    v.notes = notes
    return v
