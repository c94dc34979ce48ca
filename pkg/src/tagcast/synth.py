"""Synthetic corpora for round-trip checks and benchmarks."""

from __future__ import annotations

import random
from typing import Sequence

from .core import Label, Span, TaggedExample, spans_to_labels

_WORD_CHARS = "abcdefghijklmnopqrstuvwxyz"
_EXTRA_CHARS = "0123456789_.'"


def random_tag_names(rng: random.Random, n: int) -> tuple[str, ...]:
    return tuple(f"TAG{i}" for i in range(n))


def random_token(rng: random.Random) -> str:
    length = rng.randint(1, 10)
    chars = [rng.choice(_WORD_CHARS) for _ in range(length)]
    # A sprinkle of digits and punctuation, never whitespace or brackets.
    if length > 2 and rng.random() < 0.15:
        chars[rng.randrange(length)] = rng.choice(_EXTRA_CHARS)
    return "".join(chars)


def random_spans(
    rng: random.Random, n_tokens: int, max_spans: int, tags: Sequence[str]
) -> list[Span]:
    """Up to max_spans disjoint spans over n_tokens positions."""
    wanted = rng.randint(0, max_spans)
    taken = [False] * n_tokens
    spans: list[Span] = []
    for _ in range(wanted * 4):
        if len(spans) >= wanted:
            break
        start = rng.randrange(n_tokens)
        end = min(n_tokens - 1, start + rng.randint(0, 3))
        if any(taken[start : end + 1]):
            continue
        for i in range(start, end + 1):
            taken[i] = True
        spans.append(Span(start, end, rng.choice(tags)))
    return sorted(spans)


def random_example(
    rng: random.Random,
    id: str,
    tags: Sequence[str],
    min_tokens: int = 1,
    max_tokens: int = 40,
    max_spans: int = 8,
) -> TaggedExample:
    n = rng.randint(min_tokens, max_tokens)
    tokens = tuple(random_token(rng) for _ in range(n))
    spans = random_spans(rng, n, min(max_spans, n), tags)
    return TaggedExample(id, tokens, spans_to_labels(spans, n))


def random_corpus(
    seed: int,
    n_examples: int,
    n_tags: int = 8,
    min_tokens: int = 1,
    max_tokens: int = 40,
    max_spans: int = 8,
) -> list[TaggedExample]:
    rng = random.Random(seed)
    tags = random_tag_names(rng, n_tags)
    return [
        random_example(rng, f"ex{i}", tags, min_tokens, max_tokens, max_spans)
        for i in range(n_examples)
    ]


def fresh_token(rng: random.Random) -> str:
    """A token guaranteed absent from any random_corpus output.

    Nine consecutive digits cannot appear in random_token output, which
    injects at most one non-letter character per token.
    """
    return f"zz{rng.randrange(10**9):09d}zz"
