"""Detection metrics, hop breakdown and the paired t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from scipy.special import betainc

from .errors import EmptyDataset, LengthMismatch, TooFewPairs


@dataclass(frozen=True)
class ConfusionCounts:
    """False-premise questions are the positive class."""

    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    unparseable: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn, self.unparseable) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass
class MetricsReport:
    counts: ConfusionCounts
    tpr: float | None
    tnr: float | None
    fpr: float | None
    fnr: float | None
    precision: float | None
    f1: float | None
    accuracy: float
    # names of the metrics whose denominator was zero
    undefined: list[str] = field(default_factory=list)
    per_hop: dict[str, float] = field(default_factory=dict)
    hop_excluded: int = 0
    config: dict[str, Any] | None = None

    def to_json(self) -> dict:
        c = self.counts
        return {
            "counts": {"tp": c.tp, "tn": c.tn, "fp": c.fp, "fn": c.fn, "unparseable": c.unparseable},
            "tpr": self.tpr,
            "tnr": self.tnr,
            "fpr": self.fpr,
            "fnr": self.fnr,
            "precision": self.precision,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "undefined": list(self.undefined),
            "per_hop": dict(self.per_hop),
            "hop_excluded": self.hop_excluded,
            "config": self.config,
        }


def _ratio(num: int | float, den: int | float, name: str, undefined: list[str]) -> float | None:
    if den == 0:
        undefined.append(name)
        return None
    return num / den


def compute_metrics(counts: ConfusionCounts, config: dict | None = None) -> MetricsReport:
    if counts.total == 0:
        raise EmptyDataset("no graded records")
    c = counts
    undef: list[str] = []
    tpr = _ratio(c.tp, c.tp + c.fn, "tpr", undef)
    fnr = _ratio(c.fn, c.tp + c.fn, "fnr", undef)
    tnr = _ratio(c.tn, c.tn + c.fp, "tnr", undef)
    fpr = _ratio(c.fp, c.tn + c.fp, "fpr", undef)
    precision = _ratio(c.tp, c.tp + c.fp, "precision", undef)
    if precision is None or tpr is None or precision + tpr == 0:
        f1 = None
        undef.append("f1")
    else:
        f1 = 2 * precision * tpr / (precision + tpr)
    return MetricsReport(
        counts=c, tpr=tpr, tnr=tnr, fpr=fpr, fnr=fnr, precision=precision, f1=f1,
        accuracy=(c.tp + c.tn) / c.total, undefined=undef, config=config,
    )


def hop_bucket(hops: int) -> str:
    return "1" if hops <= 1 else ">=2"


def hop_breakdown(results: Iterable[tuple[bool, int | None]]) -> tuple[dict[str, float], int]:
    """Accuracy per hop bucket ("1", ">=2") and the number of records without hops."""
    right: dict[str, int] = {}
    seen: dict[str, int] = {}
    excluded = 0
    for correct, hops in results:
        if hops is None:
            excluded += 1
            continue
        b = hop_bucket(hops)
        seen[b] = seen.get(b, 0) + 1
        right[b] = right.get(b, 0) + int(bool(correct))
    return {b: right[b] / seen[b] for b in sorted(seen)}, excluded


@dataclass(frozen=True)
class PairedTTestResult:
    t: float
    p: float
    n: int
    mean_diff: float
    # every difference equal but not zero: t is infinite
    degenerate: bool = False

    def to_json(self) -> dict:
        t = self.t if math.isfinite(self.t) else ("inf" if self.t > 0 else "-inf")
        return {"t": t, "p": self.p, "n": self.n, "mean_diff": self.mean_diff, "degenerate": self.degenerate}


def student_t_sf2(t: float, dof: int) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student's t."""
    if math.isinf(t):
        return 0.0
    return float(betainc(dof / 2.0, 0.5, dof / (dof + t * t)))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> PairedTTestResult:
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} scores")
    n = len(a)
    if n < 2:
        raise TooFewPairs("need at least two pairs")
    d = [float(x) - float(y) for x, y in zip(a, b)]
    mean = math.fsum(d) / n
    var = math.fsum((x - mean) ** 2 for x in d) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return PairedTTestResult(0.0, 1.0, n, 0.0)
        return PairedTTestResult(math.copysign(math.inf, mean), 0.0, n, mean, degenerate=True)
    t = mean / (math.sqrt(var) / math.sqrt(n))
    return PairedTTestResult(t, student_t_sf2(t, n - 1), n, mean)
