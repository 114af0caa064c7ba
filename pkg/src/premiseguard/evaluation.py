"""Batch runners for detection, mitigation and logical-form ablation experiments.

Each runner evaluates records independently (optionally on a thread pool),
then folds the id-sorted per-record rows into a report. Rows double as the
provenance log and as input to the paired t-test.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping, Sequence

from .datasets import DatasetRecord
from .errors import EmptyDataset, IdMismatch, UnparseableVerdict
from .index import EmbeddingIndex
from .kgraph import KnowledgeGraph
from .logiform import Component
from .metrics import ConfusionCounts, MetricsReport, PairedTTestResult, compute_metrics, hop_breakdown, paired_t_test
from .mitigate import MitigationStrategy, answer, grade_answer
from .providers import ChatProvider
from .verdict import DetectionConfig, detect

log = logging.getLogger(__name__)


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_jsonl(path: str | os.PathLike, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(dumps(row) + "\n")


def read_jsonl(path: str | os.PathLike) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _map(fn: Callable[[DatasetRecord], dict], records: Sequence[DatasetRecord], workers: int) -> list[dict]:
    if workers > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(fn, records))
    else:
        rows = [fn(r) for r in records]
    return sorted(rows, key=lambda r: r["id"])


@dataclass
class DetectionRun:
    report: MetricsReport
    rows: list[dict]
    failures: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "mode": "detect",
            "metrics": self.report.to_json(),
            "n_records": len(self.rows),
            "n_graded": self.report.counts.total,
            "failures": self.failures,
        }


def _detection_row(rec: DatasetRecord, cfg: DetectionConfig, kg, index, provider) -> dict:
    row: dict[str, Any] = {
        "id": rec.id, "label": rec.label, "hops": rec.hops, "config": cfg.to_json(),
        "lf": None, "query_text": None, "evidence": None, "raw_response": None,
        "verdict": None, "predicted": None, "correct": None, "unparseable": False,
        "degraded": False, "notes": [], "error": None,
    }
    try:
        v = detect(rec.question, kg, index, provider, cfg)
    except UnparseableVerdict as exc:
        # counted as "no false premise"
        row.update(raw_response=exc.text, predicted=False, unparseable=True)
    except Exception as exc:  # one bad record must not sink the batch
        log.warning("record %s failed: %s: %s", rec.id, type(exc).__name__, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    else:
        j = v.to_json()
        row.update(lf=j["logical_form"], query_text=j["query_text"], evidence=j["evidence"],
                   raw_response=v.raw_response, verdict=v.is_false_premise, predicted=v.is_false_premise,
                   degraded=v.degraded, notes=v.notes)
    row["correct"] = int(row["predicted"] == (rec.label == "FPQ"))
    return row


def summarize_detection(rows: Sequence[dict], config: dict | None = None) -> DetectionRun:
    tp = tn = fp = fn = unp = 0
    failures = []
    for r in rows:
        if r.get("error"):
            failures.append({"id": r["id"], "error": r["error"]})
            continue
        pos = r["label"] == "FPQ"
        if r["predicted"]:
            tp, fp = tp + pos, fp + (not pos)
        else:
            fn, tn = fn + pos, tn + (not pos)
        unp += bool(r.get("unparseable"))
    counts = ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn, unparseable=unp)
    if counts.total == 0:
        raise EmptyDataset(f"none of {len(rows)} records could be graded")
    report = compute_metrics(counts, config=config)
    report.per_hop, report.hop_excluded = hop_breakdown(
        (bool(r["correct"]), r["hops"]) for r in rows if not r.get("error")
    )
    return DetectionRun(report, list(rows), failures)


def run_detection_eval(cfg: DetectionConfig, records: Sequence[DatasetRecord], kg: KnowledgeGraph | None,
                       index: EmbeddingIndex | None, provider: ChatProvider, workers: int = 1,
                       provenance_path: str | os.PathLike | None = None) -> DetectionRun:
    rows = _map(lambda r: _detection_row(r, cfg, kg, index, provider), list(records), workers)
    if provenance_path is not None:
        write_jsonl(provenance_path, rows)
    return summarize_detection(rows, config=cfg.to_json())


def run_ablation(cfg: DetectionConfig, which: Component, records: Sequence[DatasetRecord],
                 kg: KnowledgeGraph | None, index: EmbeddingIndex | None, provider: ChatProvider,
                 workers: int = 1, provenance_path: str | os.PathLike | None = None) -> DetectionRun:
    """Detection run with one logical-form component replaced by the mask token."""
    if cfg.lf_mode == "none":
        raise ValueError("ablation needs logical forms (lf_mode retrieval_only or both)")
    return run_detection_eval(replace(cfg, mask=which), records, kg, index, provider, workers, provenance_path)


@dataclass
class MitigationRun:
    accuracy: float
    correct: int
    graded: int
    unparseable: int
    skipped: int
    rows: list[dict]
    failures: list[dict] = field(default_factory=list)
    breakdown: dict[str, int] | None = None
    strategy: dict | None = None

    def to_json(self) -> dict:
        return {
            "mode": "mitigate",
            "strategy": self.strategy,
            "accuracy": self.accuracy,
            "correct": self.correct,
            "graded": self.graded,
            "unparseable": self.unparseable,
            "skipped_detection_only": self.skipped,
            "breakdown": self.breakdown,
            "failures": self.failures,
        }


def premise_breakdown(rows: Sequence[dict], baseline: Mapping[str, Mapping]) -> dict[str, int]:
    """Per-query changes against a baseline run keyed by id.

    extra_correct counts records wrong in the baseline and right now,
    fpq_improved restricts that to FPQs, tpq_change is the net change in
    correct TPQs, and regressions counts records right before and wrong now.
    """
    extra = fpq_up = tpq_delta = regress = 0
    for r in rows:
        if r.get("error") or r["id"] not in baseline or baseline[r["id"]].get("error"):
            continue
        was, now = bool(baseline[r["id"]]["correct"]), bool(r["correct"])
        if now and not was:
            extra += 1
            fpq_up += r["label"] == "FPQ"
        if was and not now:
            regress += 1
        if r["label"] == "TPQ":
            tpq_delta += int(now) - int(was)
    return {"extra_correct": extra, "fpq_improved": fpq_up, "tpq_change": tpq_delta, "regressions": regress}


def _mitigation_row(rec: DatasetRecord, strategy, kg, index, provider, det_cfg) -> dict:
    row: dict[str, Any] = {
        "id": rec.id, "label": rec.label, "hops": rec.hops, "strategy": strategy.kind,
        "final_query": None, "answer": None, "votes": [], "graded_yes": None,
        "correct": None, "unparseable": False, "verdict": None, "error": None,
    }
    try:
        aq = answer(strategy, rec.question, provider, kg, index, det_cfg)
    except Exception as exc:
        log.warning("record %s failed: %s: %s", rec.id, type(exc).__name__, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row.update(final_query=aq.final_query, answer=aq.answer_text, votes=aq.votes, graded_yes=aq.graded_yes,
               unparseable=aq.unparseable,
               verdict=aq.verdict.to_json() if aq.verdict is not None else None)
    if aq.graded_yes is None:
        row["correct"] = 0
    else:
        row["correct"] = int(grade_answer("yes" if aq.graded_yes else "no", rec.label))
    return row


def summarize_mitigation(rows: Sequence[dict], skipped: int = 0, baseline: Mapping[str, Mapping] | None = None,
                         strategy: dict | None = None) -> MitigationRun:
    graded = [r for r in rows if not r.get("error")]
    failures = [{"id": r["id"], "error": r["error"]} for r in rows if r.get("error")]
    if not graded:
        raise EmptyDataset(f"none of {len(rows)} records could be graded")
    correct = sum(r["correct"] for r in graded)
    return MitigationRun(
        accuracy=correct / len(graded),
        correct=correct,
        graded=len(graded),
        unparseable=sum(bool(r["unparseable"]) for r in graded),
        skipped=skipped,
        rows=list(rows),
        failures=failures,
        breakdown=premise_breakdown(rows, baseline) if baseline is not None else None,
        strategy=strategy,
    )


def run_mitigation_eval(strategy: MitigationStrategy, records: Sequence[DatasetRecord], kg: KnowledgeGraph | None,
                        index: EmbeddingIndex | None, provider: ChatProvider,
                        det_cfg: DetectionConfig | None = None, baseline: Sequence[dict] | None = None,
                        workers: int = 1, provenance_path: str | os.PathLike | None = None) -> MitigationRun:
    """Answer every question record under ``strategy`` and grade it.

    ``baseline`` is the row list of an earlier run (usually direct_ask); when
    given, the report carries the per-query breakdown against it.
    """
    usable = [r for r in records if not r.detection_only]
    skipped = len(records) - len(usable)
    if skipped:
        log.info("skipping %d detection-only records", skipped)
    det_cfg = det_cfg or DetectionConfig()
    rows = _map(lambda r: _mitigation_row(r, strategy, kg, index, provider, det_cfg), usable, workers)
    if provenance_path is not None:
        write_jsonl(provenance_path, rows)
    base = {r["id"]: r for r in baseline} if baseline is not None else None
    strat = {"kind": strategy.kind, "votes": strategy.votes, "vote_temperature": strategy.vote_temperature,
             "verbatim_paper_prompts": strategy.verbatim_paper_prompts, "detection": det_cfg.to_json()}
    return summarize_mitigation(rows, skipped, base, strat)


def ttest_from_rows(rows_a: Sequence[dict], rows_b: Sequence[dict]) -> PairedTTestResult:
    """Pair two provenance logs by id on their per-record correctness."""
    a = {r["id"]: r for r in rows_a}
    b = {r["id"]: r for r in rows_b}
    if set(a) != set(b):
        only_a, only_b = sorted(set(a) - set(b)), sorted(set(b) - set(a))
        raise IdMismatch(f"id sets differ: {len(only_a)} only in A, {len(only_b)} only in B")
    ids = sorted(a)
    return paired_t_test([float(a[i]["correct"] or 0) for i in ids], [float(b[i]["correct"] or 0) for i in ids])
