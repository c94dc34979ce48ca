"""Parse generated target strings back into span predictions.

Decoding is total: any byte string yields a DecodeResult. Anything
abnormal is reported through hallucination categories or parse warnings
instead of exceptions.

Span indices for the input-repeating formats come from positional
alignment (the i-th reconstructed content token maps to input index i);
the token diff against the input is used only to categorize
hallucinations. This mirrors an index-based evaluation that deliberately
ignores whether copied token text was faithful.
"""

from __future__ import annotations

import difflib
import enum
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    Family,
    FormatSpec,
    Label,
    Span,
    TagSet,
    TaggedExample,
    labels_to_spans,
    structurally_valid_tag,
)

DEFAULT_EOS = "</s>"


class Category(str, enum.Enum):
    MODIFIED_TOKEN = "modified-token"
    INSERTED_TOKEN = "inserted-token"
    DELETED_TOKEN = "deleted-token"
    TAG_COUNT_MISMATCH = "tag-count-mismatch"
    MISSING_SENTINEL = "missing-sentinel"
    DUPLICATE_SENTINEL = "duplicate-sentinel"
    OUT_OF_RANGE_SENTINEL = "out-of-range-sentinel"
    UNKNOWN_LABEL = "unknown-label"
    MALFORMED_MARKUP = "malformed-markup"


# Categories that count as hallucination, per family. Unknown labels and
# malformed markup stay warnings everywhere: they only matter indirectly,
# when they end up changing the reconstructed token or sentinel counts.
_FLAGGING: dict[Family, frozenset[Category]] = {
    Family.TAGGED_SPANS: frozenset(
        {Category.MODIFIED_TOKEN, Category.INSERTED_TOKEN, Category.DELETED_TOKEN}
    ),
    Family.INPUT_TAG: frozenset(
        {Category.MODIFIED_TOKEN, Category.INSERTED_TOKEN, Category.DELETED_TOKEN}
    ),
    Family.TAG_ONLY: frozenset({Category.TAG_COUNT_MISMATCH}),
    Family.SENTINEL_TAG: frozenset(
        {
            Category.MISSING_SENTINEL,
            Category.DUPLICATE_SENTINEL,
            Category.OUT_OF_RANGE_SENTINEL,
        }
    ),
    Family.EXTRACTIVE_TAGGED_SPANS: frozenset({Category.INSERTED_TOKEN}),
    Family.EXTRACTIVE_SENTINEL_TAG: frozenset(
        {Category.DUPLICATE_SENTINEL, Category.OUT_OF_RANGE_SENTINEL}
    ),
}


@dataclass(frozen=True)
class HallucinationReport:
    flagged: bool
    categories: frozenset[Category]
    detail: tuple[tuple[int, Category], ...]

    @classmethod
    def clean(cls) -> "HallucinationReport":
        return cls(False, frozenset(), ())


@dataclass(frozen=True)
class ExtractivePrediction:
    """Ordered multiset of (tag, phrase) items."""

    items: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class DecodeResult:
    spans: tuple[Span, ...] | None
    extractive: ExtractivePrediction | None
    reconstructed_tokens: tuple[str, ...] | None
    hallucination: HallucinationReport
    parse_warnings: tuple[str, ...]


class _Events:
    """Collects category events and warning strings during one parse."""

    def __init__(self):
        self.detail: list[tuple[int, Category]] = []
        self.warnings: list[str] = []

    def hit(self, pos: int, cat: Category, note: str | None = None):
        self.detail.append((pos, cat))
        if note:
            self.warnings.append(note)

    def warn(self, note: str):
        self.warnings.append(note)

    def report(self, family: Family) -> HallucinationReport:
        cats = frozenset(cat for _, cat in self.detail)
        flagged = bool(cats & _FLAGGING[family])
        return HallucinationReport(flagged, cats, tuple(self.detail))


def _strip_eos(text: str, eos: str) -> str:
    text = text.strip()
    while eos and text.endswith(eos):
        text = text[: -len(eos)].rstrip()
    return text


def _tag_known(tag: str, tag_set: TagSet | None) -> bool:
    if tag_set is not None:
        return tag in tag_set
    return structurally_valid_tag(tag)


# Marker classification shared by the token-markup families.
_CLOSE = "close"
_SENTINEL = "sentinel"
_OUTSIDE_MARK = "outside"
_INSIDE_BARE_MARK = "inside-bare"
_INSIDE_MARK = "inside"
_OPEN_MARK = "open"
_CONTENT = "content"


def _classify(tok: str, fmt: FormatSpec):
    if tok == fmt.close_marker:
        return _CLOSE, None
    k = fmt.parse_sentinel(tok)
    if k is not None:
        return _SENTINEL, k
    mid = fmt.parse_inside_marker(tok)
    if mid is not None:
        return _INSIDE_MARK, mid
    mid = fmt.parse_open_marker(tok)
    if mid is not None:
        if mid == "O":
            return _OUTSIDE_MARK, None
        if mid == "I":
            return _INSIDE_BARE_MARK, None
        if mid.startswith("I-") and len(mid) > 2:
            return _INSIDE_MARK, mid[2:]
        return _OPEN_MARK, mid
    return _CONTENT, tok


def decode(
    example: TaggedExample,
    generated: str,
    fmt: FormatSpec,
    tag_set: TagSet | None = None,
    eos: str = DEFAULT_EOS,
) -> DecodeResult:
    """Parse a generated target for ``example`` under format ``fmt``.

    ``tag_set`` restricts which tag names are recognized; when omitted any
    structurally valid tag is accepted.
    """
    toks = _strip_eos(generated, eos).split()
    family = fmt.family
    if family is Family.TAGGED_SPANS:
        return _decode_tagged_spans(example, toks, fmt, tag_set)
    if family is Family.INPUT_TAG:
        return _decode_input_tag(example, toks, fmt, tag_set)
    if family is Family.TAG_ONLY:
        return _decode_tag_only(example, toks, fmt, tag_set)
    if family is Family.SENTINEL_TAG:
        return _decode_sentinel_tag(example, toks, fmt, tag_set)
    if family is Family.EXTRACTIVE_TAGGED_SPANS:
        return _decode_extractive_spans(example, toks, fmt, tag_set)
    return _decode_extractive_sentinel(example, toks, fmt, tag_set)


# -- input-repeating families ------------------------------------------------


def _diff_events(
    input_tokens: Sequence[str], reconstructed: Sequence[str], ev: _Events
) -> None:
    """Categorize token differences via an LCS alignment."""
    if tuple(input_tokens) == tuple(reconstructed):
        return
    sm = difflib.SequenceMatcher(a=input_tokens, b=reconstructed, autojunk=False)
    for op, i1, i2, j1, j2 in sm.get_opcodes():
        if op == "equal":
            continue
        n_sub = min(i2 - i1, j2 - j1)
        for off in range(n_sub):
            ev.hit(i1 + off, Category.MODIFIED_TOKEN)
        for off in range(n_sub, j2 - j1):
            ev.hit(j1 + off, Category.INSERTED_TOKEN)
        for off in range(n_sub, i2 - i1):
            ev.hit(i1 + off, Category.DELETED_TOKEN)


def _positional_spans(
    raw: list[tuple[int, int, str]], n_input: int
) -> tuple[Span, ...]:
    """Clip reconstructed-coordinate spans to the input length."""
    spans = []
    for start, end, tag in raw:
        if start >= n_input:
            continue
        spans.append(Span(start, min(end, n_input - 1), tag))
    return tuple(spans)


def _decode_tagged_spans(example, toks, fmt, tag_set) -> DecodeResult:
    ev = _Events()
    content: list[str] = []
    raw_spans: list[tuple[int, int, str]] = []
    open_tag: str | None = None  # tag of the open group, "" for an O group
    group_start = 0

    def close_group():
        nonlocal open_tag
        if open_tag:
            if len(content) > group_start:
                raw_spans.append((group_start, len(content) - 1, open_tag))
            else:
                ev.warn(f"empty {open_tag!r} group")
        open_tag = None

    def open_group(tag: str):
        nonlocal open_tag, group_start
        if open_tag is not None:
            ev.hit(len(content), Category.MALFORMED_MARKUP, "marker closed an open group")
        close_group()
        open_tag = tag
        group_start = len(content)

    for tok in toks:
        kind, payload = _classify(tok, fmt)
        if kind == _CONTENT:
            content.append(tok)
        elif kind == _CLOSE:
            if open_tag is None:
                ev.hit(len(content), Category.MALFORMED_MARKUP, "stray close marker")
            else:
                close_group()
        elif kind == _OUTSIDE_MARK:
            open_group("")
        elif kind == _OPEN_MARK or kind == _INSIDE_MARK:
            if kind == _INSIDE_MARK:
                ev.warn(f"inside marker used as group opener: {tok!r}")
            if _tag_known(payload, tag_set):
                open_group(payload)
            else:
                ev.hit(
                    len(content),
                    Category.UNKNOWN_LABEL,
                    f"unknown tag {payload!r}, group treated as O",
                )
                open_group("")
        else:  # bare inside marker or sentinel: markup without a usable tag
            ev.hit(len(content), Category.MALFORMED_MARKUP, f"unexpected marker {tok!r}")
            open_group("")
    if open_tag is not None:
        ev.hit(len(content), Category.MALFORMED_MARKUP, "unclosed group at end")
        close_group()

    _diff_events(example.tokens, content, ev)
    return DecodeResult(
        spans=_positional_spans(raw_spans, example.n_tokens),
        extractive=None,
        reconstructed_tokens=tuple(content),
        hallucination=ev.report(Family.TAGGED_SPANS),
        parse_warnings=tuple(ev.warnings),
    )


def _decode_input_tag(example, toks, fmt, tag_set) -> DecodeResult:
    ev = _Events()
    content: list[str] = []
    marks: list[tuple[str, str | None]] = []  # per content token: (kind, tag)
    pending: tuple[str, str | None] | None = None

    def set_pending(value: tuple[str, str | None]):
        nonlocal pending
        if pending is not None:
            ev.hit(len(content), Category.MALFORMED_MARKUP, "label marker without a token")
        pending = value

    for tok in toks:
        kind, payload = _classify(tok, fmt)
        if kind == _CONTENT:
            content.append(tok)
            marks.append(pending if pending is not None else ("O", None))
            pending = None
        elif kind == _OUTSIDE_MARK:
            set_pending(("O", None))
        elif kind == _OPEN_MARK:
            if _tag_known(payload, tag_set):
                set_pending(("B", payload))
            else:
                ev.hit(len(content), Category.UNKNOWN_LABEL, f"unknown tag {payload!r}")
                set_pending(("O", None))
        elif kind == _INSIDE_MARK:
            if _tag_known(payload, tag_set):
                set_pending(("I", payload))
            else:
                ev.hit(len(content), Category.UNKNOWN_LABEL, f"unknown tag {payload!r}")
                set_pending(("O", None))
        elif kind == _INSIDE_BARE_MARK:
            set_pending(("I", None))
        else:  # close marker or sentinel: not part of this grammar
            ev.hit(len(content), Category.MALFORMED_MARKUP, f"unexpected marker {tok!r}")
    if pending is not None:
        ev.hit(len(content), Category.MALFORMED_MARKUP, "trailing label marker")

    labels = _finalize_marks(marks, ev)
    raw = [(sp.start, sp.end, sp.tag) for sp in labels_to_spans(labels)] if labels else []
    _diff_events(example.tokens, content, ev)
    return DecodeResult(
        spans=_positional_spans(raw, example.n_tokens),
        extractive=None,
        reconstructed_tokens=tuple(content),
        hallucination=ev.report(Family.INPUT_TAG),
        parse_warnings=tuple(ev.warnings),
    )


def _finalize_marks(
    marks: Sequence[tuple[str, str | None]], ev: _Events
) -> tuple[Label, ...]:
    """Resolve bare-inside continuations and repair the sequence to IOB2."""
    labels: list[Label] = []
    open_tag: str | None = None
    for i, (kind, tag) in enumerate(marks):
        if kind == "O":
            labels.append(Label.outside())
            open_tag = None
        elif kind == "B":
            labels.append(Label.begin(tag))
            open_tag = tag
        else:  # inside
            if tag is None:
                if open_tag is None:
                    ev.warn(f"bare inside label at position {i} with no open tag")
                    labels.append(Label.outside())
                else:
                    labels.append(Label.inside(open_tag))
            else:
                if tag != open_tag:
                    ev.warn(f"dangling inside label at position {i} treated as begin")
                    labels.append(Label.begin(tag))
                else:
                    labels.append(Label.inside(tag))
                open_tag = tag
    return tuple(labels)


# -- label-only families -------------------------------------------------------


def _resolve_bare_label(
    text: str, pos: int, tag_set: TagSet | None, ev: _Events
) -> tuple[str, str | None]:
    """Map a bare label string to ('O'|'B'|'I', tag)."""
    if text == "O":
        return ("O", None)
    if text == "I":
        return ("I", None)
    if text.startswith("I-") and len(text) > 2:
        tag = text[2:]
        if _tag_known(tag, tag_set):
            return ("I", tag)
        ev.hit(pos, Category.UNKNOWN_LABEL, f"unknown label {text!r} treated as O")
        return ("O", None)
    if _tag_known(text, tag_set):
        return ("B", text)
    ev.hit(pos, Category.UNKNOWN_LABEL, f"unknown label {text!r} treated as O")
    return ("O", None)


def _decode_tag_only(example, toks, fmt, tag_set) -> DecodeResult:
    ev = _Events()
    n = example.n_tokens
    if len(toks) != n:
        ev.hit(
            len(toks),
            Category.TAG_COUNT_MISMATCH,
            f"expected {n} labels, got {len(toks)}",
        )
    marks = [
        _resolve_bare_label(tok, i, tag_set, ev)
        for i, tok in enumerate(toks[:n])
    ]
    labels = _finalize_marks(marks, ev)
    spans = labels_to_spans(labels) if labels else ()
    return DecodeResult(
        spans=spans,
        extractive=None,
        reconstructed_tokens=None,
        hallucination=ev.report(Family.TAG_ONLY),
        parse_warnings=tuple(ev.warnings),
    )


def _scan_sentinel_pairs(
    toks: Sequence[str], fmt: FormatSpec, ev: _Events
) -> list[tuple[int, str | None]]:
    """Collect (sentinel index, following label string or None) in order."""
    pairs: list[tuple[int, str | None]] = []
    expecting_label = False
    for tok in toks:
        k = fmt.parse_sentinel(tok)
        if k is not None:
            pairs.append((k, None))
            expecting_label = True
        elif expecting_label:
            pairs[-1] = (pairs[-1][0], tok)
            expecting_label = False
        else:
            ev.hit(len(pairs), Category.MALFORMED_MARKUP, f"stray token {tok!r}")
    return pairs


def _decode_sentinel_tag(example, toks, fmt, tag_set) -> DecodeResult:
    ev = _Events()
    n = example.n_tokens
    first_label: dict[int, str | None] = {}
    for k, label in _scan_sentinel_pairs(toks, fmt, ev):
        if not 0 <= k < n:
            ev.hit(k, Category.OUT_OF_RANGE_SENTINEL)
        elif k in first_label:
            ev.hit(k, Category.DUPLICATE_SENTINEL)
        else:
            first_label[k] = label
    for k in range(n):
        if k not in first_label:
            ev.hit(k, Category.MISSING_SENTINEL)

    marks = []
    for k in range(n):
        label = first_label.get(k)
        if label is None:
            # Missing sentinel, or a sentinel with no label (legal when the
            # format omits Outside labels): both read as Outside.
            marks.append(("O", None))
        else:
            marks.append(_resolve_bare_label(label, k, tag_set, ev))
    labels = _finalize_marks(marks, ev)
    return DecodeResult(
        spans=labels_to_spans(labels) if labels else (),
        extractive=None,
        reconstructed_tokens=None,
        hallucination=ev.report(Family.SENTINEL_TAG),
        parse_warnings=tuple(ev.warnings),
    )


# -- extractive families -------------------------------------------------------


def _locatable(phrase_tokens: list[str], input_tokens: Sequence[str]) -> bool:
    m = len(phrase_tokens)
    if m == 0:
        return True
    for i in range(len(input_tokens) - m + 1):
        if list(input_tokens[i : i + m]) == phrase_tokens:
            return True
    return False


def _decode_extractive_spans(example, toks, fmt, tag_set) -> DecodeResult:
    ev = _Events()
    items: list[tuple[str, list[str]]] = []
    collecting = False  # words go to the current item
    for tok in toks:
        kind, payload = _classify(tok, fmt)
        if kind == _CONTENT:
            if collecting:
                items[-1][1].append(tok)
            else:
                ev.hit(len(items), Category.MALFORMED_MARKUP, f"untagged phrase word {tok!r}")
        elif kind in (_OPEN_MARK, _INSIDE_MARK):
            if kind == _INSIDE_MARK:
                ev.warn(f"inside marker opened an item: {tok!r}")
            if _tag_known(payload, tag_set):
                items.append((payload, []))
                collecting = True
            else:
                ev.hit(len(items), Category.UNKNOWN_LABEL, f"unknown tag {payload!r}, item dropped")
                collecting = False
        elif kind == _CLOSE:
            collecting = False
        else:  # <O>, <I>, sentinels: nothing to attach words to
            ev.hit(len(items), Category.MALFORMED_MARKUP, f"unexpected marker {tok!r}")
            collecting = False

    kept: list[tuple[str, str]] = []
    for idx, (tag, words) in enumerate(items):
        if not words:
            ev.warn(f"empty phrase for {tag!r} dropped")
            continue
        if not _locatable(words, example.tokens):
            ev.hit(idx, Category.INSERTED_TOKEN, f"phrase {' '.join(words)!r} not in input")
        kept.append((tag, " ".join(words)))
    return DecodeResult(
        spans=None,
        extractive=ExtractivePrediction(tuple(kept)),
        reconstructed_tokens=None,
        hallucination=ev.report(Family.EXTRACTIVE_TAGGED_SPANS),
        parse_warnings=tuple(ev.warnings),
    )


def _decode_extractive_sentinel(example, toks, fmt, tag_set) -> DecodeResult:
    ev = _Events()
    n = example.n_tokens
    assignment: dict[int, tuple[int, str]] = {}  # position -> (span id, tag)
    seen: set[int] = set()
    prev_k: int | None = None  # last successfully placed position
    next_id = 0

    for k, label in _scan_sentinel_pairs(toks, fmt, ev):
        if k in seen:
            ev.hit(k, Category.DUPLICATE_SENTINEL)
            continue
        if not 0 <= k < n:
            ev.hit(k, Category.OUT_OF_RANGE_SENTINEL)
            continue
        seen.add(k)
        if label is None or label == "I":
            # Bare continuation: extends the previous position's span.
            if prev_k == k - 1 and (k - 1) in assignment:
                assignment[k] = assignment[k - 1]
                prev_k = k
            else:
                ev.warn(f"continuation sentinel {k} has nothing to extend")
                prev_k = None
            continue
        kind, tag = _resolve_bare_label(label, k, tag_set, ev)
        if kind == "O":  # literal Outside or an unknown label (already reported)
            prev_k = None
            continue
        if kind == "I":
            if prev_k == k - 1 and (k - 1) in assignment and assignment[k - 1][1] == tag:
                assignment[k] = assignment[k - 1]
            else:
                ev.warn(f"dangling inside at sentinel {k} treated as begin")
                assignment[k] = (next_id, tag)
                next_id += 1
        else:  # begin
            assignment[k] = (next_id, tag)
            next_id += 1
        prev_k = k

    by_id: dict[int, list[int]] = {}
    tags: dict[int, str] = {}
    for pos, (sid, tag) in assignment.items():
        by_id.setdefault(sid, []).append(pos)
        tags[sid] = tag
    spans = tuple(
        sorted(Span(min(ps), max(ps), tags[sid]) for sid, ps in by_id.items())
    )
    items = tuple(
        (sp.tag, " ".join(example.tokens[sp.start : sp.end + 1])) for sp in spans
    )
    return DecodeResult(
        spans=spans,
        extractive=ExtractivePrediction(items),
        reconstructed_tokens=None,
        hallucination=ev.report(Family.EXTRACTIVE_SENTINEL_TAG),
        parse_warnings=tuple(ev.warnings),
    )


def text_faithful_spans(result: DecodeResult, example: TaggedExample) -> tuple[Span, ...]:
    """Predicted spans whose copied text matches the input at their indices.

    For formats that do not repeat the input this is just the span set.
    """
    if result.spans is None:
        return ()
    if result.reconstructed_tokens is None:
        return result.spans
    recon = result.reconstructed_tokens
    kept = []
    for sp in result.spans:
        if sp.end < len(recon) and all(
            recon[i] == example.tokens[i] for i in range(sp.start, sp.end + 1)
        ):
            kept.append(sp)
    return tuple(kept)
