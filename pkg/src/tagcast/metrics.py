"""Evaluation metrics: perfect rate, span F1, extractive F1, hit@K,
hallucination rate.

Aggregation keeps exact integer counts per tag and only divides at the
end, so partial results can be merged across workers without floating
point drift.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .core import Span
from .decode import DecodeResult, ExtractivePrediction, HallucinationReport


def _f1_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """(precision, recall, f1) with the empty-denominator conventions.

    No predictions counts as precision 0 when something was expected and
    precision 1 when nothing was; symmetrically for recall. 0/0 in the
    harmonic mean is defined as 0.
    """
    if tp + fp == 0:
        precision = 1.0 if fn == 0 else 0.0
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall = 1.0 if fp == 0 else 0.0
    else:
        recall = tp / (tp + fn)
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class TagCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def f1(self) -> float:
        return _f1_from_counts(self.tp, self.fp, self.fn)[2]

    def merged(self, other: "TagCounts") -> "TagCounts":
        return TagCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class F1Scores:
    """Pooled exact-match counts plus the derived micro/macro scores."""

    precision: float
    recall: float
    micro_f1: float
    macro_f1: float
    per_tag: Mapping[str, TagCounts]

    @classmethod
    def from_per_tag(cls, per_tag: Mapping[str, TagCounts]) -> "F1Scores":
        tp = sum(c.tp for c in per_tag.values())
        fp = sum(c.fp for c in per_tag.values())
        fn = sum(c.fn for c in per_tag.values())
        precision, recall, micro = _f1_from_counts(tp, fp, fn)
        # Macro averages over tags that occur in the gold data; with no
        # gold tags at all it degenerates to the micro score.
        gold_tags = [t for t, c in per_tag.items() if c.tp + c.fn > 0]
        macro = (
            sum(per_tag[t].f1 for t in gold_tags) / len(gold_tags)
            if gold_tags
            else micro
        )
        return cls(precision, recall, micro, macro, dict(per_tag))


def perfect_metric(gold: Sequence[Span], pred: Sequence[Span]) -> bool:
    """True iff the predicted span set equals the gold span set exactly."""
    return set(gold) == set(pred)


def span_f1(
    pairs: Iterable[tuple[Sequence[Span], Sequence[Span]]]
) -> F1Scores:
    """Exact-match span F1 over (gold, predicted) span lists."""
    tp: Counter[str] = Counter()
    fp: Counter[str] = Counter()
    fn: Counter[str] = Counter()
    for gold, pred in pairs:
        gold_set = set(gold)
        pred_set = set(pred)
        for sp in pred_set:
            if sp in gold_set:
                tp[sp.tag] += 1
            else:
                fp[sp.tag] += 1
        for sp in gold_set - pred_set:
            fn[sp.tag] += 1
    tags = sorted(set(tp) | set(fp) | set(fn))
    return F1Scores.from_per_tag(
        {t: TagCounts(tp[t], fp[t], fn[t]) for t in tags}
    )


ItemMultiset = Sequence[tuple[str, str]]


def extractive_perfect(gold: ItemMultiset, pred: ItemMultiset) -> bool:
    return Counter(gold) == Counter(pred)


def extractive_f1(pairs: Iterable[tuple[ItemMultiset, ItemMultiset]]) -> F1Scores:
    """Multiset-intersection F1 over (tag, phrase) items."""
    tp: Counter[str] = Counter()
    fp: Counter[str] = Counter()
    fn: Counter[str] = Counter()
    for gold, pred in pairs:
        gold_ms = Counter(gold)
        pred_ms = Counter(pred)
        matched = gold_ms & pred_ms
        for (tag, _), c in matched.items():
            tp[tag] += c
        for (tag, _), c in (pred_ms - matched).items():
            fp[tag] += c
        for (tag, _), c in (gold_ms - matched).items():
            fn[tag] += c
    tags = sorted(set(tp) | set(fp) | set(fn))
    return F1Scores.from_per_tag(
        {t: TagCounts(tp[t], fp[t], fn[t]) for t in tags}
    )


def hit_at_k(
    gold: Sequence[Span] | ItemMultiset,
    candidates: Sequence[DecodeResult],
    k: int,
    extractive: bool = False,
) -> bool:
    """Whether any of the first k candidates matches the gold exactly.

    Fewer than k candidates means all available ones are checked.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    for cand in candidates[:k]:
        if extractive:
            items = cand.extractive.items if cand.extractive else ()
            if extractive_perfect(gold, items):
                return True
        else:
            if perfect_metric(gold, cand.spans or ()):
                return True
    return False


def hallucination_rate(reports: Sequence[HallucinationReport]) -> float:
    if not reports:
        warnings.warn("hallucination_rate over zero reports, returning 0.0")
        return 0.0
    return sum(1 for r in reports if r.flagged) / len(reports)


@dataclass(frozen=True)
class MetricsReport:
    """Full evaluation summary for one prediction file."""

    n_examples: int
    perfect: float
    precision: float
    recall: float
    micro_f1: float
    macro_f1: float
    hallucination_rate: float
    per_tag: Mapping[str, TagCounts]
    hit_at_k: float | None = None
    k: int | None = None

    def to_json_dict(self) -> dict:
        out = {
            "schema": 1,
            "n_examples": self.n_examples,
            "perfect": self.perfect,
            "precision": self.precision,
            "recall": self.recall,
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "hallucination_rate": self.hallucination_rate,
            "hit_at_k": self.hit_at_k,
            "k": self.k,
            "per_tag": {
                tag: {"tp": c.tp, "fp": c.fp, "fn": c.fn, "f1": c.f1}
                for tag, c in sorted(self.per_tag.items())
            },
        }
        return out

    def to_text(self) -> str:
        rows = [
            ("examples", f"{self.n_examples}"),
            ("perfect", f"{self.perfect:.4f}"),
            ("precision", f"{self.precision:.4f}"),
            ("recall", f"{self.recall:.4f}"),
            ("micro_f1", f"{self.micro_f1:.4f}"),
            ("macro_f1", f"{self.macro_f1:.4f}"),
            ("hallucination_rate", f"{self.hallucination_rate:.4f}"),
        ]
        if self.hit_at_k is not None:
            rows.append((f"hit@{self.k}", f"{self.hit_at_k:.4f}"))
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {value}" for name, value in rows]
        if self.per_tag:
            lines.append("")
            lines.append(f"{'tag':<24} {'tp':>6} {'fp':>6} {'fn':>6} {'f1':>8}")
            for tag, c in sorted(self.per_tag.items()):
                lines.append(f"{tag:<24} {c.tp:>6} {c.fp:>6} {c.fn:>6} {c.f1:>8.4f}")
        return "\n".join(lines)


def build_report(
    gold: Sequence[Sequence[Span]] | Sequence[ItemMultiset],
    predictions: Sequence[Sequence[Span]] | Sequence[ItemMultiset],
    reports: Sequence[HallucinationReport],
    extractive: bool = False,
    hits: Sequence[bool] | None = None,
    k: int | None = None,
) -> MetricsReport:
    if not (len(gold) == len(predictions) == len(reports)):
        raise ValueError("gold, predictions and reports must align")
    if extractive:
        scores = extractive_f1(zip(gold, predictions))
        n_perfect = sum(
            1 for g, p in zip(gold, predictions) if extractive_perfect(g, p)
        )
    else:
        scores = span_f1(zip(gold, predictions))
        n_perfect = sum(
            1 for g, p in zip(gold, predictions) if perfect_metric(g, p)
        )
    n = len(gold)
    return MetricsReport(
        n_examples=n,
        perfect=n_perfect / n if n else 0.0,
        precision=scores.precision,
        recall=scores.recall,
        micro_f1=scores.micro_f1,
        macro_f1=scores.macro_f1,
        hallucination_rate=hallucination_rate(reports) if n else 0.0,
        per_tag=scores.per_tag,
        hit_at_k=(sum(hits) / len(hits) if hits else None) if hits is not None else None,
        k=k,
    )
