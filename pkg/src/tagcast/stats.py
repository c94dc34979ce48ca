"""Corpus statistics: per-dataset averages, span-tag entropy, and
sequence-length summaries per target format.

Length counting goes through a pluggable tokenizer so subword vocabularies
can be swapped in; the built-ins count whitespace tokens or UTF-8 bytes.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .core import TaggedExample, labels_to_spans
from .encode import EncodedPair
from .errors import EmptyDataset


@dataclass(frozen=True)
class LengthTokenizer:
    name: str
    count: Callable[[str], int]


WHITESPACE_TOKENIZER = LengthTokenizer("whitespace", lambda text: len(text.split()))
BYTE_TOKENIZER = LengthTokenizer("bytes", lambda text: len(text.encode("utf-8")))

TOKENIZERS: dict[str, LengthTokenizer] = {
    t.name: t for t in (WHITESPACE_TOKENIZER, BYTE_TOKENIZER)
}


@dataclass(frozen=True)
class DatasetStats:
    n_examples: int
    tokens_per_example: float
    spans_per_example: float
    pct_tokens_tagged: float
    n_tag_classes: int
    tag_entropy: float

    def to_json_dict(self) -> dict:
        return {
            "n_examples": self.n_examples,
            "tokens_per_example": self.tokens_per_example,
            "spans_per_example": self.spans_per_example,
            "pct_tokens_tagged": self.pct_tokens_tagged,
            "n_tag_classes": self.n_tag_classes,
            "tag_entropy": self.tag_entropy,
        }


def tag_entropy(span_tag_counts: Mapping[str, int]) -> float:
    """Shannon entropy (bits) of the span-tag distribution; Outside excluded."""
    total = sum(span_tag_counts.values())
    if total == 0:
        return 0.0
    entropy = 0.0
    for count in span_tag_counts.values():
        if count:
            p = count / total
            entropy -= p * math.log2(p)
    return entropy


def dataset_stats(examples: Sequence[TaggedExample]) -> DatasetStats:
    if not examples:
        raise EmptyDataset("no examples")
    n_tokens = 0
    n_tagged = 0
    n_spans = 0
    tag_counts: Counter[str] = Counter()
    for ex in examples:
        spans = labels_to_spans(ex.labels)
        n_tokens += ex.n_tokens
        n_spans += len(spans)
        for sp in spans:
            n_tagged += len(sp)
            tag_counts[sp.tag] += 1
    n = len(examples)
    return DatasetStats(
        n_examples=n,
        tokens_per_example=n_tokens / n,
        spans_per_example=n_spans / n,
        pct_tokens_tagged=100.0 * n_tagged / n_tokens,
        n_tag_classes=len(tag_counts),
        tag_entropy=tag_entropy(tag_counts),
    )


def nearest_rank_p99(values: Sequence[int]) -> int:
    """Smallest value with at least 99% of observations at or below it."""
    if not values:
        raise EmptyDataset("no values")
    ordered = sorted(values)
    rank = math.ceil(0.99 * len(ordered))
    return ordered[max(rank, 1) - 1]


@dataclass(frozen=True)
class FormatLengthStats:
    n: int
    input_mean: float
    input_p99: int
    target_mean: float
    target_p99: int

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "input_mean": self.input_mean,
            "input_p99": self.input_p99,
            "target_mean": self.target_mean,
            "target_p99": self.target_p99,
        }


@dataclass(frozen=True)
class LengthStats:
    tokenizer: str
    per_format: Mapping[str, FormatLengthStats]

    def to_json_dict(self) -> dict:
        return {
            "tokenizer": self.tokenizer,
            "per_format": {
                label: s.to_json_dict() for label, s in sorted(self.per_format.items())
            },
        }

    def to_text(self) -> str:
        lines = [
            f"{'format':<32} {'n':>7} {'in mean':>9} {'in p99':>7} "
            f"{'tgt mean':>9} {'tgt p99':>8}"
        ]
        for label, s in sorted(self.per_format.items()):
            lines.append(
                f"{label:<32} {s.n:>7} {s.input_mean:>9.2f} {s.input_p99:>7} "
                f"{s.target_mean:>9.2f} {s.target_p99:>8}"
            )
        return "\n".join(lines)


def length_stats(
    pairs: Iterable[EncodedPair],
    tokenizer: LengthTokenizer = WHITESPACE_TOKENIZER,
) -> LengthStats:
    """Mean and nearest-rank p99 lengths, grouped by format."""
    by_format: dict[str, tuple[list[int], list[int]]] = {}
    for pair in pairs:
        ins, tgts = by_format.setdefault(pair.format.label(), ([], []))
        ins.append(tokenizer.count(pair.input_text))
        tgts.append(tokenizer.count(pair.target_text))
    if not by_format:
        raise EmptyDataset("no encoded pairs")
    per_format = {}
    for label, (ins, tgts) in by_format.items():
        per_format[label] = FormatLengthStats(
            n=len(ins),
            input_mean=sum(ins) / len(ins),
            input_p99=nearest_rank_p99(ins),
            target_mean=sum(tgts) / len(tgts),
            target_p99=nearest_rank_p99(tgts),
        )
    return LengthStats(tokenizer.name, per_format)
