"""Render (input, target) text pairs for every supported format.

All functions are pure; the same example and format always produce the
same strings. Tokens are joined with single spaces, so the emitted texts
never contain tabs, newlines, leading/trailing blanks or double spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import (
    Family,
    FormatSpec,
    LabelKind,
    SentinelSpacing,
    Span,
    TaggedExample,
    labels_to_spans,
)
from .errors import ReservedTokenCollision, SentinelOverflow


@dataclass(frozen=True)
class EncodedPair:
    id: str
    input_text: str
    target_text: str
    format: FormatSpec


def check_reserved_tokens(example: TaggedExample, fmt: FormatSpec) -> None:
    """Reject tokens the decoder would mistake for markup or sentinels."""
    for i, tok in enumerate(example.tokens):
        if fmt.token_is_reserved(tok):
            raise ReservedTokenCollision(
                f"example {example.id!r}: token {i} ({tok!r}) collides with "
                f"{fmt.label()} markup"
            )


def _check_sentinel_capacity(example: TaggedExample, fmt: FormatSpec) -> None:
    if example.n_tokens - 1 > fmt.max_sentinel_index:
        raise SentinelOverflow(
            f"example {example.id!r} has {example.n_tokens} tokens but only "
            f"sentinel indices 0..{fmt.max_sentinel_index} are available"
        )


def encode_input(example: TaggedExample, fmt: FormatSpec) -> str:
    """Input text: the raw tokens, or sentinel-interleaved tokens."""
    check_reserved_tokens(example, fmt)
    if not fmt.family.uses_sentinels:
        return " ".join(example.tokens)
    _check_sentinel_capacity(example, fmt)
    if fmt.sentinel_spacing is SentinelSpacing.SPACE:
        parts = [f"{fmt.sentinel(k)} {tok}" for k, tok in enumerate(example.tokens)]
    else:
        parts = [f"{fmt.sentinel(k)}{tok}" for k, tok in enumerate(example.tokens)]
    return " ".join(parts)


def target_tokens(example: TaggedExample, fmt: FormatSpec) -> list[str]:
    """Whitespace tokens of the target text, in order."""
    check_reserved_tokens(example, fmt)
    family = fmt.family
    if family is Family.TAGGED_SPANS:
        return _tagged_spans_target(example, fmt)
    if family is Family.INPUT_TAG:
        return _input_tag_target(example, fmt)
    if family is Family.TAG_ONLY:
        return _tag_only_target(example, fmt)
    if family is Family.SENTINEL_TAG:
        _check_sentinel_capacity(example, fmt)
        return _sentinel_tag_target(example, fmt)
    if family is Family.EXTRACTIVE_TAGGED_SPANS:
        return _extractive_spans_target(example, fmt)
    _check_sentinel_capacity(example, fmt)
    return _extractive_sentinel_target(example, fmt)


def encode_target(example: TaggedExample, fmt: FormatSpec) -> str:
    return " ".join(target_tokens(example, fmt))


def encode_pair(example: TaggedExample, fmt: FormatSpec) -> EncodedPair:
    return EncodedPair(
        id=example.id,
        input_text=encode_input(example, fmt),
        target_text=encode_target(example, fmt),
        format=fmt,
    )


def _tagged_spans_target(example: TaggedExample, fmt: FormatSpec) -> list[str]:
    # Tagged spans become one marked group each; every Outside token is its
    # own group (or a bare token when Outside groups are simplified away).
    out: list[str] = []
    span_at = {sp.start: sp for sp in labels_to_spans(example.labels)}
    i = 0
    while i < example.n_tokens:
        sp = span_at.get(i)
        if sp is not None:
            out.append(fmt.open_marker(sp.tag))
            out.extend(example.tokens[sp.start : sp.end + 1])
            out.append(fmt.close_marker)
            i = sp.end + 1
        elif fmt.simplified_outside:
            out.append(example.tokens[i])
            i += 1
        else:
            out.extend((fmt.outside_marker, example.tokens[i], fmt.close_marker))
            i += 1
    return out


def _input_tag_target(example: TaggedExample, fmt: FormatSpec) -> list[str]:
    out: list[str] = []
    for tok, lab in zip(example.tokens, example.labels):
        if lab.kind is LabelKind.OUTSIDE:
            if not fmt.simplified_outside:
                out.append(fmt.outside_marker)
        elif lab.kind is LabelKind.BEGIN:
            out.append(fmt.open_marker(lab.tag))
        else:
            out.append(fmt.inside_marker(lab.tag))
        out.append(tok)
    return out


def _tag_only_target(example: TaggedExample, fmt: FormatSpec) -> list[str]:
    out: list[str] = []
    for lab in example.labels:
        if lab.kind is LabelKind.OUTSIDE:
            out.append("O")
        elif lab.kind is LabelKind.BEGIN:
            out.append(fmt.begin_label(lab.tag))
        else:
            out.append(fmt.inside_label(lab.tag))
    return out


def _sentinel_tag_target(example: TaggedExample, fmt: FormatSpec) -> list[str]:
    out: list[str] = []
    for k, lab in enumerate(example.labels):
        out.append(fmt.sentinel(k))
        if lab.kind is LabelKind.OUTSIDE:
            if not fmt.simplified_outside:
                out.append("O")
        elif lab.kind is LabelKind.BEGIN:
            out.append(fmt.begin_label(lab.tag))
        else:
            out.append(fmt.inside_label(lab.tag))
    return out


def _extractive_spans_target(example: TaggedExample, fmt: FormatSpec) -> list[str]:
    out: list[str] = []
    for sp in labels_to_spans(example.labels):
        out.append(fmt.open_marker(sp.tag))
        out.extend(example.tokens[sp.start : sp.end + 1])
    return out


def _extractive_sentinel_target(example: TaggedExample, fmt: FormatSpec) -> list[str]:
    out: list[str] = []
    for sp in labels_to_spans(example.labels):
        out.extend((fmt.sentinel(sp.start), fmt.begin_label(sp.tag)))
        for k in range(sp.start + 1, sp.end + 1):
            out.append(fmt.sentinel(k))
            if not fmt.extractive_simplified:
                out.append(f"I-{sp.tag}")
    return out


def gold_extractive_items(
    example: TaggedExample, spans: Sequence[Span] | None = None
) -> tuple[tuple[str, str], ...]:
    """(tag, phrase) pairs for the example's spans, phrases space-joined."""
    if spans is None:
        spans = labels_to_spans(example.labels)
    return tuple(
        (sp.tag, " ".join(example.tokens[sp.start : sp.end + 1])) for sp in spans
    )
