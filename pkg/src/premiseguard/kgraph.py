"""String-keyed knowledge graph: loading, normalization, entity linking."""

from __future__ import annotations

import json
import logging
import os
import unicodedata
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator

from .errors import FormatError, NoCandidates

if TYPE_CHECKING:
    from .index import EmbeddingIndex
    from .logiform import TripleQuery

log = logging.getLogger(__name__)


def _strip_ends(s: str) -> str:
    start, end = 0, len(s)
    while start < end and (s[start].isspace() or unicodedata.category(s[start]).startswith("P")):
        start += 1
    while end > start and (s[end - 1].isspace() or unicodedata.category(s[end - 1]).startswith("P")):
        end -= 1
    return s[start:end]


def _normalize_once(s: str) -> str:
    s = unicodedata.normalize("NFC", s).casefold()
    s = unicodedata.normalize("NFC", s)
    return " ".join(_strip_ends(s).split())


def normalize_surface(s: str) -> str:
    """Case-fold, NFC, collapse whitespace, drop quotes/punctuation at the ends."""
    prev = s
    for _ in range(8):
        cur = _normalize_once(prev)
        if cur == prev:
            break
        prev = cur
    return prev


@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str

    def __post_init__(self):
        for name in ("subject", "relation", "object"):
            if not normalize_surface(getattr(self, name)):
                raise ValueError(f"triple {name} is empty after normalization")

    def key(self) -> tuple[str, str, str]:
        return (
            normalize_surface(self.subject),
            normalize_surface(self.relation),
            normalize_surface(self.object),
        )

    def text(self) -> str:
        """Form fed to the encoder."""
        return f"{self.subject} | {self.relation} | {self.object}"

    def as_list(self) -> list[str]:
        return [self.subject, self.relation, self.object]

    def bracketed(self) -> str:
        """``['s', 'r', 'o']``, the display form used in prompts."""
        return repr(self.as_list())


@dataclass(frozen=True)
class Subgraph:
    triple_ids: tuple[int, ...]
    node_ids: tuple[int, ...]


class KnowledgeGraph:
    """Immutable set of triples with an entity index and incidence lists.

    Entities are identified by their normalized surface; the id order is the
    order in which entities are first seen (subject before object).
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self.triples: list[Triple] = []
        self.entities: list[str] = []
        self.entity_index: dict[str, int] = {}
        self.adjacency: list[list[int]] = []
        self.endpoints: list[tuple[int, int]] = []
        seen: set[tuple[str, str, str]] = set()
        for t in triples:
            k = t.key()
            if k in seen:
                continue
            seen.add(k)
            tid = len(self.triples)
            self.triples.append(t)
            s = self._entity_id(t.subject)
            o = self._entity_id(t.object)
            self.endpoints.append((s, o))
            self.adjacency[s].append(tid)
            if o != s:
                self.adjacency[o].append(tid)
        self.relations = sorted({normalize_surface(t.relation) for t in self.triples})

    def _entity_id(self, surface: str) -> int:
        norm = normalize_surface(surface)
        eid = self.entity_index.get(norm)
        if eid is None:
            eid = len(self.entities)
            self.entity_index[norm] = eid
            self.entities.append(surface.strip())
            self.adjacency.append([])
        return eid

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.triples)

    @property
    def num_entities(self) -> int:
        return len(self.entities)

    def find_entity(self, surface: str) -> int | None:
        return self.entity_index.get(normalize_surface(surface))

    def stats(self) -> dict[str, int]:
        return {
            "triples": len(self.triples),
            "entities": len(self.entities),
            "relations": len(self.relations),
        }

    def subgraph(self, triple_ids: Iterable[int], node_ids: Iterable[int] = ()) -> Subgraph:
        tids = tuple(sorted(set(triple_ids)))
        nodes = set(node_ids)
        for tid in tids:
            if not 0 <= tid < len(self.triples):
                raise IndexError(f"triple id {tid} not in graph")
            nodes.update(self.endpoints[tid])
        return Subgraph(tids, tuple(sorted(nodes)))


def _parse_record(line: str, fmt: str, lineno: int) -> Triple:
    if fmt == "jsonl":
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(rec, dict):
            raise FormatError("expected a JSON object", lineno)
        try:
            fields = rec["subject"], rec["relation"], rec["object"]
        except KeyError as exc:
            raise FormatError(f"missing field {exc.args[0]!r}", lineno) from None
    else:
        fields = tuple(line.rstrip("\r\n").split("\t"))
        if len(fields) != 3:
            raise FormatError(f"expected 3 tab-separated columns, got {len(fields)}", lineno)
    if not all(isinstance(f, str) for f in fields):
        raise FormatError("triple fields must be strings", lineno)
    try:
        return Triple(*fields)
    except ValueError as exc:
        raise FormatError(str(exc), lineno) from None


def load_triples(source: str | os.PathLike | Iterable[str]) -> KnowledgeGraph:
    """Read JSON Lines or 3-column TSV triples; format is sniffed from the first
    non-blank line. ``source`` is a path or an iterable of lines."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return load_triples(list(fh))

    triples = []
    fmt = None
    for lineno, line in enumerate(source, 1):
        if not line.strip():
            continue
        if fmt is None:
            fmt = "jsonl" if line.lstrip().startswith("{") else "tsv"
        triples.append(_parse_record(line, fmt, lineno))
    kg = KnowledgeGraph(triples)
    log.info(
        "loaded %d triples (%d duplicates collapsed), %d entities, %d relations",
        len(kg), len(triples) - len(kg), kg.num_entities, len(kg.relations),
    )
    return kg


def link_entity(
    kg: KnowledgeGraph, surface: str, index: EmbeddingIndex, max: int = 3
) -> list[tuple[int, float]]:
    """Rank graph entities for a surface string.

    An exact normalized match comes first with score 1.0; remaining slots go
    to the most cosine-similar entity names. Ties break on entity id.
    """
    if kg.num_entities == 0:
        raise NoCandidates("graph has no entities")
    if max <= 0:
        return []
    out: list[tuple[int, float]] = []
    exact = kg.find_entity(surface)
    if exact is not None:
        out.append((exact, 1.0))
    scores = index.entity_scores(index.embed_query(surface))
    ranked = sorted(range(kg.num_entities), key=lambda e: (-scores[e], e))
    for eid in ranked:
        if len(out) >= max:
            break
        if eid != exact:
            out.append((eid, float(scores[eid])))
    return out


def candidate_triples(
    kg: KnowledgeGraph, tq: TripleQuery, index: EmbeddingIndex, max: int = 20, link_k: int = 3
) -> list[Triple]:
    return [kg.triples[tid] for tid, _ in scored_candidates(kg, tq, index, max, link_k)]


def scored_candidates(
    kg: KnowledgeGraph, tq: TripleQuery, index: EmbeddingIndex, max: int = 20, link_k: int = 3
) -> list[tuple[int, float]]:
    """Triples incident to the linked source/target candidates, as (triple id,
    link score) sorted by score desc then id."""
    if kg.num_entities == 0:
        raise NoCandidates("graph has no entities")
    if max <= 0:
        return []
    best: dict[int, float] = {}
    surfaces = [tq.source] + ([tq.target] if tq.target else [])
    for surface in surfaces:
        for eid, score in link_entity(kg, surface, index, link_k):
            for tid in kg.adjacency[eid]:
                if score > best.get(tid, float("-inf")):
                    best[tid] = score
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:max]
