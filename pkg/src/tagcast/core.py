"""Domain types: BIO labels, spans, tag sets, and target-format configuration.

Everything here is an immutable value; instances can be shared freely
between workers.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import (
    InadmissibleFormat,
    OverlappingSpans,
    SpanOutOfRange,
)

OUTSIDE = "O"
INSIDE_BARE = "I"


class LabelKind(enum.Enum):
    OUTSIDE = "O"
    BEGIN = "B"
    INSIDE = "I"


@dataclass(frozen=True)
class Label:
    """One BIO label. Begin/Inside carry a tag, Outside does not."""

    kind: LabelKind
    tag: str | None = None

    def __post_init__(self):
        if self.kind is LabelKind.OUTSIDE:
            if self.tag is not None:
                raise ValueError("Outside labels carry no tag")
        elif not self.tag:
            raise ValueError(f"{self.kind.name} labels require a tag")

    @classmethod
    def outside(cls) -> "Label":
        return _OUTSIDE_LABEL

    @classmethod
    def begin(cls, tag: str) -> "Label":
        return cls(LabelKind.BEGIN, tag)

    @classmethod
    def inside(cls, tag: str) -> "Label":
        return cls(LabelKind.INSIDE, tag)

    @classmethod
    def from_string(cls, text: str) -> "Label":
        """Parse 'O', 'B-TAG' or 'I-TAG'."""
        if text == OUTSIDE:
            return cls.outside()
        if len(text) > 2 and text[1] == "-" and text[0] in ("B", "I"):
            kind = LabelKind.BEGIN if text[0] == "B" else LabelKind.INSIDE
            return cls(kind, text[2:])
        raise ValueError(f"not a BIO label: {text!r}")

    def to_string(self) -> str:
        if self.kind is LabelKind.OUTSIDE:
            return OUTSIDE
        return f"{self.kind.value}-{self.tag}"


_OUTSIDE_LABEL = Label(LabelKind.OUTSIDE)


def validate_tag_name(tag: str) -> None:
    """Reject tag names that would make the target grammars ambiguous."""
    if not tag:
        raise ValueError("empty tag name")
    if any(c.isspace() for c in tag):
        raise ValueError(f"tag contains whitespace: {tag!r}")
    if "<" in tag or ">" in tag:
        raise ValueError(f"tag contains angle brackets: {tag!r}")
    if tag in (OUTSIDE, INSIDE_BARE):
        raise ValueError(f"{tag!r} is reserved and cannot be a tag name")
    if tag.startswith("I-"):
        # 'I-X' as a tag name cannot be told apart from Inside(X) in the
        # bare-label grammars, so it is rejected at construction.
        raise ValueError(f"tag may not start with 'I-': {tag!r}")


def structurally_valid_tag(tag: str) -> bool:
    try:
        validate_tag_name(tag)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class TagSet:
    """Ordered set of span tag names."""

    tags: tuple[str, ...]

    def __post_init__(self):
        seen = set()
        for t in self.tags:
            validate_tag_name(t)
            if t in seen:
                raise ValueError(f"duplicate tag: {t!r}")
            seen.add(t)

    @classmethod
    def from_iterable(cls, tags: Iterable[str]) -> "TagSet":
        return cls(tuple(tags))

    def __contains__(self, tag: str) -> bool:
        return tag in set(self.tags)

    def __iter__(self):
        return iter(self.tags)

    def __len__(self):
        return len(self.tags)


@dataclass(frozen=True, order=True)
class Span:
    """Token-index span, inclusive on both ends."""

    start: int
    end: int
    tag: str

    def __post_init__(self):
        if self.start < 0:
            raise SpanOutOfRange(f"negative start: {self.start}")
        if self.end < self.start:
            raise SpanOutOfRange(f"end {self.end} before start {self.start}")

    def __len__(self) -> int:
        return self.end - self.start + 1


def repair_labels(labels: Sequence[Label]) -> tuple[tuple[Label, ...], tuple[int, ...]]:
    """Normalize a label sequence to valid IOB2.

    An Inside whose predecessor is not Begin/Inside of the same tag becomes
    a Begin. Returns the repaired sequence plus the positions that changed.
    """
    repaired: list[Label] = []
    changed: list[int] = []
    prev_tag: str | None = None
    for i, lab in enumerate(labels):
        if lab.kind is LabelKind.INSIDE and lab.tag != prev_tag:
            repaired.append(Label.begin(lab.tag))
            changed.append(i)
            prev_tag = lab.tag
        else:
            repaired.append(lab)
            prev_tag = lab.tag if lab.kind is not LabelKind.OUTSIDE else None
    return tuple(repaired), tuple(changed)


def labels_to_spans(labels: Sequence[Label]) -> tuple[Span, ...]:
    """Extract maximal tagged spans from a BIO sequence.

    Total: ill-formed Inside labels are repaired to Begin first.
    """
    fixed, _ = repair_labels(labels)
    spans: list[Span] = []
    start: int | None = None
    tag: str | None = None
    for i, lab in enumerate(fixed):
        if lab.kind is LabelKind.BEGIN:
            if start is not None:
                spans.append(Span(start, i - 1, tag))
            start, tag = i, lab.tag
        elif lab.kind is LabelKind.OUTSIDE:
            if start is not None:
                spans.append(Span(start, i - 1, tag))
                start, tag = None, None
        # Inside extends the open span (repair guarantees one is open).
    if start is not None:
        spans.append(Span(start, len(fixed) - 1, tag))
    return tuple(spans)


def spans_to_labels(spans: Sequence[Span], n_tokens: int) -> tuple[Label, ...]:
    """Inverse of labels_to_spans. Raises on overlap or out-of-range spans."""
    labels: list[Label] = [Label.outside()] * n_tokens
    taken = [False] * n_tokens
    for sp in spans:
        if sp.end >= n_tokens:
            raise SpanOutOfRange(f"span {sp} exceeds {n_tokens} tokens")
        if any(taken[sp.start : sp.end + 1]):
            raise OverlappingSpans(f"span {sp} overlaps a previous span")
        for i in range(sp.start, sp.end + 1):
            taken[i] = True
        labels[sp.start] = Label.begin(sp.tag)
        for i in range(sp.start + 1, sp.end + 1):
            labels[i] = Label.inside(sp.tag)
    return tuple(labels)


@dataclass(frozen=True)
class TaggedExample:
    """Tokens plus per-token BIO labels; labels are IOB2-repaired on construction."""

    id: str
    tokens: tuple[str, ...]
    labels: tuple[Label, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError(f"example {self.id!r} has no tokens")
        if len(self.labels) != len(self.tokens):
            raise ValueError(
                f"example {self.id!r}: {len(self.labels)} labels for "
                f"{len(self.tokens)} tokens"
            )
        for tok in self.tokens:
            if not tok:
                raise ValueError(f"example {self.id!r}: empty token")
            if any(c.isspace() for c in tok):
                raise ValueError(f"example {self.id!r}: token {tok!r} contains whitespace")
        fixed, _ = repair_labels(self.labels)
        object.__setattr__(self, "labels", fixed)

    @classmethod
    def from_strings(
        cls, id: str, tokens: Sequence[str], labels: Sequence[str]
    ) -> "TaggedExample":
        return cls(id, tuple(tokens), tuple(Label.from_string(s) for s in labels))

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)

    def spans(self) -> tuple[Span, ...]:
        return labels_to_spans(self.labels)

    def tag_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for lab in self.labels:
            if lab.tag is not None:
                seen.setdefault(lab.tag)
        return tuple(seen)


class Family(str, enum.Enum):
    TAGGED_SPANS = "tagged-spans"
    INPUT_TAG = "input-tag"
    TAG_ONLY = "tag-only"
    SENTINEL_TAG = "sentinel-tag"
    EXTRACTIVE_TAGGED_SPANS = "extractive-tagged-spans"
    EXTRACTIVE_SENTINEL_TAG = "extractive-sentinel-tag"

    @property
    def uses_sentinels(self) -> bool:
        return self in (Family.SENTINEL_TAG, Family.EXTRACTIVE_SENTINEL_TAG)

    @property
    def is_extractive(self) -> bool:
        return self in (Family.EXTRACTIVE_TAGGED_SPANS, Family.EXTRACTIVE_SENTINEL_TAG)

    @property
    def repeats_input(self) -> bool:
        """Whether the target must copy every input token."""
        return self in (Family.TAGGED_SPANS, Family.INPUT_TAG)


class SentinelSpacing(str, enum.Enum):
    SPACE = "space"
    NO_SPACE = "nospace"


# (simplified_inside, simplified_outside, extractive_simplified) per family.
_ADMISSIBLE: dict[Family, frozenset[tuple[bool, bool, bool]]] = {
    Family.TAGGED_SPANS: frozenset({(False, False, False), (False, True, False)}),
    Family.INPUT_TAG: frozenset(
        {(False, False, False), (True, False, False), (True, True, False)}
    ),
    Family.TAG_ONLY: frozenset({(False, False, False), (True, False, False)}),
    Family.SENTINEL_TAG: frozenset(
        {(False, False, False), (True, False, False), (True, True, False)}
    ),
    Family.EXTRACTIVE_TAGGED_SPANS: frozenset({(False, False, False)}),
    Family.EXTRACTIVE_SENTINEL_TAG: frozenset(
        {(False, False, False), (False, False, True)}
    ),
}

DEFAULT_SENTINEL_TEMPLATE = "<extra_id_{k}>"
DEFAULT_OPEN_TAG_TEMPLATE = "<{tag}>"
DEFAULT_INSIDE_TAG_TEMPLATE = "<I-{tag}>"
DEFAULT_CLOSE_MARKER = "</>"
DEFAULT_MAX_SENTINEL_INDEX = 99


def _check_template(template: str, placeholder: str, what: str) -> None:
    if template.count(placeholder) != 1:
        raise InadmissibleFormat(
            f"{what} must contain exactly one {placeholder!r}: {template!r}"
        )
    if any(c.isspace() for c in template):
        raise InadmissibleFormat(f"{what} may not contain whitespace: {template!r}")


def _affixes(template: str, placeholder: str) -> tuple[str, str]:
    prefix, suffix = template.split(placeholder)
    return prefix, suffix


@dataclass(frozen=True)
class FormatSpec:
    """One of the 13 supported target grammars plus markup configuration."""

    family: Family
    simplified_inside: bool = False
    simplified_outside: bool = False
    extractive_simplified: bool = False
    sentinel_template: str = DEFAULT_SENTINEL_TEMPLATE
    open_tag_template: str = DEFAULT_OPEN_TAG_TEMPLATE
    inside_tag_template: str = DEFAULT_INSIDE_TAG_TEMPLATE
    close_marker: str = DEFAULT_CLOSE_MARKER
    sentinel_spacing: SentinelSpacing = SentinelSpacing.SPACE
    max_sentinel_index: int = DEFAULT_MAX_SENTINEL_INDEX

    def __post_init__(self):
        combo = (
            self.simplified_inside,
            self.simplified_outside,
            self.extractive_simplified,
        )
        if combo not in _ADMISSIBLE[self.family]:
            flags = ", ".join(
                name
                for name, on in zip(("si", "so", "simplified"), combo)
                if on
            )
            raise InadmissibleFormat(
                f"{self.family.value} does not admit flags ({flags or 'none'})"
            )
        _check_template(self.sentinel_template, "{k}", "sentinel template")
        _check_template(self.open_tag_template, "{tag}", "open-tag template")
        _check_template(self.inside_tag_template, "{tag}", "inside-tag template")
        if not self.close_marker or any(c.isspace() for c in self.close_marker):
            raise InadmissibleFormat(f"bad close marker: {self.close_marker!r}")
        if self.max_sentinel_index < 0:
            raise InadmissibleFormat(
                f"max sentinel index must be >= 0: {self.max_sentinel_index}"
            )

    # -- rendering ---------------------------------------------------------

    def sentinel(self, k: int) -> str:
        return self.sentinel_template.format(k=k)

    def open_marker(self, tag: str) -> str:
        return self.open_tag_template.format(tag=tag)

    def inside_marker(self, tag: str) -> str:
        if self.simplified_inside:
            return self.open_tag_template.format(tag=INSIDE_BARE)
        return self.inside_tag_template.format(tag=tag)

    @property
    def outside_marker(self) -> str:
        return self.open_tag_template.format(tag=OUTSIDE)

    def begin_label(self, tag: str) -> str:
        return tag

    def inside_label(self, tag: str) -> str:
        return INSIDE_BARE if self.simplified_inside else f"I-{tag}"

    # -- parsing helpers ---------------------------------------------------

    @cached_property
    def sentinel_regex(self) -> re.Pattern[str]:
        prefix, suffix = _affixes(self.sentinel_template, "{k}")
        return re.compile(re.escape(prefix) + r"(\d+)" + re.escape(suffix))

    @cached_property
    def _open_affixes(self) -> tuple[str, str]:
        return _affixes(self.open_tag_template, "{tag}")

    @cached_property
    def _inside_affixes(self) -> tuple[str, str]:
        return _affixes(self.inside_tag_template, "{tag}")

    def parse_sentinel(self, token: str) -> int | None:
        m = self.sentinel_regex.fullmatch(token)
        return int(m.group(1)) if m else None

    def parse_inside_marker(self, token: str) -> str | None:
        prefix, suffix = self._inside_affixes
        if (
            token.startswith(prefix)
            and token.endswith(suffix)
            and len(token) > len(prefix) + len(suffix)
        ):
            return token[len(prefix) : len(token) - len(suffix)]
        return None

    def parse_open_marker(self, token: str) -> str | None:
        prefix, suffix = self._open_affixes
        if (
            token.startswith(prefix)
            and token.endswith(suffix)
            and len(token) > len(prefix) + len(suffix)
        ):
            return token[len(prefix) : len(token) - len(suffix)]
        return None

    def token_is_reserved(self, token: str) -> bool:
        """True when a token would be mistaken for markup by the decoder."""
        return (
            token == self.close_marker
            or self.parse_sentinel(token) is not None
            or self.parse_open_marker(token) is not None
            or self.parse_inside_marker(token) is not None
        )

    # -- identity ----------------------------------------------------------

    def label(self) -> str:
        """Compact canonical name, e.g. 'sentinel-tag(si,so)'."""
        flags = []
        if self.simplified_inside:
            flags.append("si")
        if self.simplified_outside:
            flags.append("so")
        if self.extractive_simplified:
            flags.append("s")
        base = self.family.value
        return f"{base}({','.join(flags)})" if flags else base

    @classmethod
    def from_label(cls, text: str, **overrides) -> "FormatSpec":
        m = re.fullmatch(r"([a-z-]+)(?:\(([a-z,]*)\))?", text.strip())
        if m is None:
            raise InadmissibleFormat(f"cannot parse format label {text!r}")
        try:
            family = Family(m.group(1))
        except ValueError:
            raise InadmissibleFormat(f"unknown format family {m.group(1)!r}") from None
        flags = set(filter(None, (m.group(2) or "").split(",")))
        unknown = flags - {"si", "so", "s"}
        if unknown:
            raise InadmissibleFormat(f"unknown format flags: {sorted(unknown)}")
        return cls(
            family,
            simplified_inside="si" in flags,
            simplified_outside="so" in flags,
            extractive_simplified="s" in flags,
            **overrides,
        )


def all_format_specs(**overrides) -> tuple[FormatSpec, ...]:
    """The 13 admissible format configurations, in a stable order."""
    specs = []
    for family, combos in _ADMISSIBLE.items():
        for si, so, xs in sorted(combos):
            specs.append(
                FormatSpec(
                    family,
                    simplified_inside=si,
                    simplified_outside=so,
                    extractive_simplified=xs,
                    **overrides,
                )
            )
    return tuple(specs)
