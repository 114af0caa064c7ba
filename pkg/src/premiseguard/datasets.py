"""Benchmark loaders mapping KG-FPQ, CREAK, FEVER and generic JSON Lines to one record type."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Literal

from .errors import FormatError

log = logging.getLogger(__name__)

Label = Literal["FPQ", "TPQ"]
FORMATS = ("kgfpq", "creak", "fever", "generic")


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    question: str
    label: Label
    hops: int | None = None
    meta: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)
    # claim-style sets (CREAK, FEVER) are used for detection only
    detection_only: bool = False


@dataclass
class Dataset:
    records: list[DatasetRecord]
    format: str
    dropped: int = 0

    def __iter__(self) -> Iterator[DatasetRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


_TRUE = {"tpq", "true", "yes", "supports", "supported", "1"}
_FALSE = {"fpq", "false", "no", "refutes", "refuted", "0"}
_NEI = {"not enough info", "not enough information", "nei", "not_enough_info"}


def _label(value: Any, idx: int) -> Label:
    if isinstance(value, bool):
        return "TPQ" if value else "FPQ"
    key = str(value).strip().casefold()
    if key in _TRUE:
        return "TPQ"
    if key in _FALSE:
        return "FPQ"
    raise FormatError(f"record {idx}: unrecognized label {value!r}")


def _first(rec: dict, keys: tuple[str, ...], idx: int, what: str) -> Any:
    for k in keys:
        if k in rec and rec[k] not in (None, ""):
            return rec[k]
    raise FormatError(f"record {idx}: missing {what} (looked for {', '.join(keys)})")


def _hops(value: Any, idx: int) -> int | None:
    if value is None or value == "":
        return None
    try:
        hops = int(value)
    except (TypeError, ValueError):
        raise FormatError(f"record {idx}: hops must be an integer, got {value!r}") from None
    if hops < 1:
        raise FormatError(f"record {idx}: hops must be >= 1")
    return hops


def _lines(source) -> Iterable[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return list(fh)
    return source


def load_dataset(source: str | os.PathLike | Iterable[str], format: str = "generic") -> Dataset:
    """Load JSON Lines benchmark records.

    Field mapping per ``format``:

    - kgfpq / generic: ``question``, ``label`` (FPQ/TPQ, or a truth value of the
      premise), optional ``hops`` and ``id``.
    - creak: ``sentence`` or ``claim``; label true -> TPQ, false -> FPQ.
    - fever: ``claim``; Supported -> TPQ, Refuted -> FPQ, Not Enough Info is
      dropped and counted in ``Dataset.dropped``.

    Errors carry the 1-based record index.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown dataset format {format!r}; expected one of {FORMATS}")
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    dropped = 0
    idx = 0
    for line in _lines(source):
        if not line.strip():
            continue
        idx += 1
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"record {idx}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise FormatError(f"record {idx}: expected a JSON object")

        if format == "creak":
            text = _first(rec, ("sentence", "claim"), idx, "claim text")
            rid = rec.get("ex_id", rec.get("id", idx))
            label = _label(_first(rec, ("label",), idx, "label"), idx)
            used = {"sentence", "claim", "ex_id", "id", "label"}
        elif format == "fever":
            text = _first(rec, ("claim",), idx, "claim")
            rid = rec.get("id", idx)
            raw = _first(rec, ("label",), idx, "label")
            if str(raw).strip().casefold() in _NEI:
                dropped += 1
                continue
            label = _label(raw, idx)
            used = {"claim", "id", "label"}
        else:
            text = _first(rec, ("question",), idx, "question")
            rid = rec.get("id", idx)
            if "label" in rec:
                label = _label(rec["label"], idx)
            else:
                label = _label(_first(rec, ("answer",), idx, "label"), idx)
            used = {"question", "id", "label", "answer", "hops"}

        rid = str(rid)
        if rid in seen:
            raise FormatError(f"record {idx}: duplicate id {rid!r}")
        seen.add(rid)
        if not isinstance(text, str) or not text.strip():
            raise FormatError(f"record {idx}: empty question text")
        hops = _hops(rec.get("hops"), idx) if format in ("kgfpq", "generic") else None
        records.append(DatasetRecord(
            id=rid,
            question=text.strip(),
            label=label,
            hops=hops,
            meta={k: v for k, v in rec.items() if k not in used},
            detection_only=format in ("creak", "fever"),
        ))
    if dropped:
        log.info("dropped %d not-enough-info records", dropped)
    return Dataset(records, format, dropped)
