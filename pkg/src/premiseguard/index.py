"""Dense vectors for every triple and entity of a graph, with exhaustive scoring."""

from __future__ import annotations

import hashlib
import json
import os
import threading

import numpy as np

from .errors import FormatError
from .kgraph import KnowledgeGraph
from .providers import Embedder

FORMAT = "premiseguard-index"
VERSION = 1


def graph_digest(kg: KnowledgeGraph) -> str:
    h = hashlib.sha256()
    for t in kg.triples:
        h.update(json.dumps(t.as_list(), ensure_ascii=False).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


class EmbeddingIndex:
    def __init__(self, kg: KnowledgeGraph, embedder: Embedder, triple_vectors: np.ndarray,
                 entity_vectors: np.ndarray):
        self.kg = kg
        self.embedder = embedder
        self.triple_vectors = triple_vectors
        self.entity_vectors = entity_vectors
        self._queries: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    @classmethod
    def build(cls, kg: KnowledgeGraph, embedder: Embedder) -> EmbeddingIndex:
        dim = embedder.dim or 0
        tv = embedder.embed([t.text() for t in kg.triples])
        ev = embedder.embed(kg.entities)
        if tv:
            dim = len(tv[0])
        return cls(
            kg,
            embedder,
            np.vstack(tv) if tv else np.zeros((0, dim)),
            np.vstack(ev) if ev else np.zeros((0, dim)),
        )

    def embed_query(self, text: str) -> np.ndarray:
        with self._lock:
            vec = self._queries.get(text)
        if vec is None:
            vec = self.embedder.embed([text])[0]
            with self._lock:
                self._queries[text] = vec
        return vec

    def triple_scores(self, vec: np.ndarray) -> np.ndarray:
        """Cosine of ``vec`` (unit norm) against every triple, by triple id."""
        if not len(self.triple_vectors):
            return np.zeros(0)
        return np.clip(self.triple_vectors @ vec, -1.0, 1.0)

    def entity_scores(self, vec: np.ndarray) -> np.ndarray:
        if not len(self.entity_vectors):
            return np.zeros(0)
        return np.clip(self.entity_vectors @ vec, -1.0, 1.0)

    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "model": self.embedder.model_id,
            "dim": int(self.triple_vectors.shape[1]) if self.triple_vectors.ndim == 2 else 0,
            "kg_digest": graph_digest(self.kg),
            "triples": [t.as_list() for t in self.kg.triples],
            "triple_vectors": self.triple_vectors.tolist(),
            "entities": self.kg.entities,
            "entity_vectors": self.entity_vectors.tolist(),
        }
        return json.dumps(doc, ensure_ascii=False, sort_keys=True) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path: str | os.PathLike, kg: KnowledgeGraph, embedder: Embedder) -> EmbeddingIndex:
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: not an index file ({exc.msg})") from None
        if doc.get("format") != FORMAT or doc.get("version") != VERSION:
            raise FormatError(f"{path}: unsupported index format/version")
        if doc["model"] != embedder.model_id:
            raise FormatError(f"{path}: built with {doc['model']!r}, embedder is {embedder.model_id!r}")
        if doc["kg_digest"] != graph_digest(kg):
            raise FormatError(f"{path}: index was built for a different graph")
        dim = doc["dim"]
        # reshape(-1, 0) is ambiguous, so size the rows explicitly
        tv = np.asarray(doc["triple_vectors"], dtype=np.float64).reshape(len(doc["triple_vectors"]), dim)
        ev = np.asarray(doc["entity_vectors"], dtype=np.float64).reshape(len(doc["entity_vectors"]), dim)
        return cls(kg, embedder, tv, ev)
