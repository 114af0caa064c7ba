"""Chat-completion and embedding backends.

Every backend can be wrapped in a content-addressed disk cache, so a rerun
with a warm cache is byte-identical and makes no network calls. Offline runs
use :class:`ScriptedChat` (prompt -> canned reply transcripts) and
:class:`HashingEmbedder`.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import httpx
import numpy as np

from .errors import DimensionMismatch, ProviderError, ZeroVector

log = logging.getLogger(__name__)

DEFAULT_EMBED_MODEL = "all-roberta-large-v1"
DEFAULT_CHAT_MODEL = "gpt-4o-mini"
MOCK_DIM = 256
MAX_ATTEMPTS = 3
BACKOFF_BASE = 1.0


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]
    model: str = DEFAULT_CHAT_MODEL
    temperature: float = 0.0
    top_p: float = 1.0
    # distinguishes deliberate resamples of the same prompt (retries, votes)
    nonce: int = 0

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple((r, t) for r, t in self.messages))
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p {self.top_p} outside (0, 1]")

    @property
    def prompt(self) -> str:
        return "\n\n".join(text for _, text in self.messages)


def cache_key(backend_id: str, req: ChatRequest) -> str:
    payload = json.dumps(
        [backend_id, req.model, req.temperature, req.top_p, req.nonce, [list(m) for m in req.messages]],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ChatProvider:
    backend_id = "abstract"

    def __init__(self, model: str = DEFAULT_CHAT_MODEL):
        self.model = model
        self.calls = 0
        self._count_lock = threading.Lock()

    def chat(self, req: ChatRequest) -> str:
        with self._count_lock:
            self.calls += 1
        return self._send(req)

    def _send(self, req: ChatRequest) -> str:
        raise NotImplementedError

    def complete(self, prompt: str, temperature: float = 0.0, top_p: float = 1.0, nonce: int = 0) -> str:
        """Single user-turn convenience wrapper around :meth:`chat`."""
        req = ChatRequest((("user", prompt),), self.model, temperature, top_p, nonce)
        return self.chat(req)


def _with_retries(fn: Callable[[], httpx.Response], what: str, attempts: int, backoff: float,
                  sleep: Callable[[float], None]) -> dict:
    last = ""
    for attempt in range(attempts):
        try:
            resp = fn()
        except httpx.HTTPError as exc:
            last = f"{type(exc).__name__}: {exc}"
        else:
            if resp.status_code in (401, 403):
                raise ProviderError(f"{what}: authentication failed ({resp.status_code})")
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
            elif resp.status_code >= 400:
                raise ProviderError(f"{what}: HTTP {resp.status_code}: {resp.text[:200]}")
            else:
                try:
                    return resp.json()
                except ValueError:
                    raise ProviderError(f"{what}: response is not JSON") from None
        if attempt + 1 < attempts:
            delay = backoff * (2 ** attempt)
            log.warning("%s failed (%s), retrying in %.1fs", what, last, delay)
            sleep(delay)
    raise ProviderError(f"{what}: giving up after {attempts} attempts ({last})")


class HTTPChat(ChatProvider):
    """OpenAI-style ``POST {endpoint}/chat/completions`` client."""

    backend_id = "http"

    def __init__(self, endpoint: str, api_key: str | None = None, model: str = DEFAULT_CHAT_MODEL,
                 timeout: float = 60.0, max_in_flight: int = 8, attempts: int = MAX_ATTEMPTS,
                 backoff: float = BACKOFF_BASE, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        super().__init__(model)
        self.endpoint = endpoint.rstrip("/")
        self.backend_id = f"http:{self.endpoint}"
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.attempts = attempts
        self.backoff = backoff
        self._sleep = sleep

    def _send(self, req: ChatRequest) -> str:
        body = {
            "model": req.model,
            "messages": [{"role": r, "content": t} for r, t in req.messages],
            "temperature": req.temperature,
            "top_p": req.top_p,
        }
        with self._slots:
            data = _with_retries(
                lambda: self._client.post(f"{self.endpoint}/chat/completions", json=body),
                "chat", self.attempts, self.backoff, self._sleep,
            )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ProviderError("chat: unexpected response shape") from None


class ScriptedChat(ChatProvider):
    """Replays canned replies keyed by the exact prompt text.

    A prompt may map to a list of replies; the request nonce picks the entry
    (clamped to the last one), which is how retries and votes are scripted.
    Unknown prompts go to ``fallback`` if given, else raise ProviderError.
    """

    backend_id = "scripted"

    def __init__(self, transcripts: Mapping[str, str | Sequence[str]], fallback: ChatProvider | None = None,
                 model: str = DEFAULT_CHAT_MODEL):
        super().__init__(model)
        self.transcripts = {k: [v] if isinstance(v, str) else list(v) for k, v in transcripts.items()}
        self.fallback = fallback

    def _send(self, req: ChatRequest) -> str:
        replies = self.transcripts.get(req.prompt)
        if replies:
            return replies[min(req.nonce, len(replies) - 1)]
        if self.fallback is not None:
            return self.fallback.chat(req)
        raise ProviderError(f"no scripted reply for prompt {req.prompt[:80]!r}...")


def load_transcripts(path: str | os.PathLike) -> dict[str, list[str]]:
    """JSON Lines of ``{"prompt": ..., "response": ...}``; repeated prompts
    accumulate into a list in file order."""
    out: dict[str, list[str]] = defaultdict(list)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[rec["prompt"]].append(rec["response"])
            except (ValueError, KeyError, TypeError):
                raise ProviderError(f"{path}:{lineno}: bad transcript record") from None
    return dict(out)


class RecordingChat(ChatProvider):
    """Pass-through that remembers every (prompt, nonce, reply) it sees."""

    def __init__(self, inner: ChatProvider):
        super().__init__(inner.model)
        self.inner = inner
        self.backend_id = inner.backend_id
        self.log: dict[tuple[str, int], str] = {}
        self._lock = threading.Lock()

    def _send(self, req: ChatRequest) -> str:
        reply = self.inner.chat(req)
        with self._lock:
            self.log[(req.prompt, req.nonce)] = reply
        return reply

    def dump(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (prompt, _nonce), reply in sorted(self.log.items()):
                fh.write(json.dumps({"prompt": prompt, "response": reply}, ensure_ascii=False) + "\n")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _KeyLocks:
    def __init__(self):
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def __call__(self, key: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())


class CachedChat(ChatProvider):
    """Disk cache in front of another chat provider.

    Files live at ``<cache_dir>/chat/<2 hex>/<sha256>.json``. Reads are
    lock-free; writers for the same key are serialized and write atomically.
    """

    def __init__(self, inner: ChatProvider, cache_dir: str | os.PathLike):
        super().__init__(inner.model)
        self.inner = inner
        self.backend_id = inner.backend_id
        self.root = Path(cache_dir) / "chat"
        self.hits = 0
        self.misses = 0
        self._locks = _KeyLocks()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def _send(self, req: ChatRequest) -> str:
        key = cache_key(self.backend_id, req)
        path = self._path(key)
        if path.exists():
            self.hits += 1
            return json.loads(path.read_text(encoding="utf-8"))["response"]
        with self._locks(key):
            if path.exists():
                self.hits += 1
                return json.loads(path.read_text(encoding="utf-8"))["response"]
            self.misses += 1
            reply = self.inner.chat(req)
            _atomic_write(path, json.dumps({"prompt": req.prompt, "nonce": req.nonce, "response": reply},
                                           ensure_ascii=False))
        return reply


# --- embeddings -------------------------------------------------------------

def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise ZeroVector("cannot normalize a zero or non-finite vector")
    return v / norm


class Embedder:
    model_id = "abstract"
    dim: int | None = None

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            return []
        out = [_unit(np.asarray(v, dtype=np.float64)) for v in self._embed_raw(list(texts))]
        if len(out) != len(texts):
            raise ProviderError(f"embedder returned {len(out)} vectors for {len(texts)} texts")
        return out

    def _embed_raw(self, texts: list[str]) -> Iterable[Sequence[float]]:
        raise NotImplementedError


_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.casefold())


def token_bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


def mock_embed(text: str, dim: int = MOCK_DIM) -> np.ndarray:
    """Hashed bag of tokens, L2-normalized.

    Tokens are case-folded alphanumeric runs (underscores split), so ``Nominated("A", "B")`` and
    ``A | nominated | B`` share every token. Text without tokens hashes the
    empty string so the result is still a unit vector.
    """
    counts = np.zeros(dim, dtype=np.float64)
    for tok in tokenize(text) or [""]:
        counts[token_bucket(tok, dim)] += 1.0
    return counts / np.linalg.norm(counts)


class HashingEmbedder(Embedder):
    def __init__(self, dim: int = MOCK_DIM):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.model_id = f"hashing-bow-{dim}"
        self.calls = 0

    def _embed_raw(self, texts):
        self.calls += 1
        return [mock_embed(t, self.dim) for t in texts]


class HTTPEmbedder(Embedder):
    """OpenAI-style ``POST {endpoint}/embeddings`` client."""

    def __init__(self, endpoint: str, api_key: str | None = None, model: str = DEFAULT_EMBED_MODEL,
                 batch_size: int = 64, timeout: float = 60.0, attempts: int = MAX_ATTEMPTS,
                 backoff: float = BACKOFF_BASE, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model
        self.batch_size = batch_size
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self.attempts = attempts
        self.backoff = backoff
        self._sleep = sleep

    def _embed_raw(self, texts):
        out = []
        for i in range(0, len(texts), self.batch_size):
            batch = texts[i:i + self.batch_size]
            body = {"model": self.model_id, "input": batch}
            data = _with_retries(
                lambda: self._client.post(f"{self.endpoint}/embeddings", json=body),
                "embed", self.attempts, self.backoff, self._sleep,
            )
            try:
                rows = sorted(data["data"], key=lambda r: r.get("index", 0))
                out.extend(r["embedding"] for r in rows)
            except (KeyError, TypeError):
                raise ProviderError("embed: unexpected response shape") from None
        return out


class CachedEmbedder(Embedder):
    """Per-text disk cache at ``<cache_dir>/embed/<2 hex>/<sha256>.json``."""

    def __init__(self, inner: Embedder, cache_dir: str | os.PathLike):
        self.inner = inner
        self.model_id = inner.model_id
        self.dim = inner.dim
        self.root = Path(cache_dir) / "embed"
        self.misses = 0

    def _path(self, text: str) -> Path:
        key = hashlib.sha256(json.dumps([self.model_id, text], ensure_ascii=False).encode()).hexdigest()
        return self.root / key[:2] / f"{key}.json"

    def _embed_raw(self, texts):
        out: list = [None] * len(texts)
        todo = []
        for i, t in enumerate(texts):
            p = self._path(t)
            if p.exists():
                out[i] = json.loads(p.read_text(encoding="utf-8"))
            else:
                todo.append(i)
        if todo:
            self.misses += len(todo)
            fresh = self.inner.embed([texts[i] for i in todo])
            for i, vec in zip(todo, fresh):
                values = [float(x) for x in vec]
                _atomic_write(self._path(texts[i]), json.dumps(values))
                out[i] = values
        return out


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(_unit(a), _unit(b)), -1.0, 1.0))
