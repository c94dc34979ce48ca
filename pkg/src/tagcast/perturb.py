"""Single-fault target corruption for hallucination-detector checks.

Each perturbation simulates one model mistake: a content token changed,
added or lost; a sentinel pair dropped or duplicated; a label dropped from
a label-only target. Decoding the corrupted target against the original
example must flag exactly the matching category.
"""

from __future__ import annotations

import enum
import random

from .core import Family, FormatSpec, Label, TaggedExample
from .decode import Category
from .encode import encode_target, target_tokens
from .errors import ConfigError
from .synth import fresh_token


class Perturbation(str, enum.Enum):
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"
    DROP_SENTINEL = "drop-sentinel"
    DUPLICATE_SENTINEL = "duplicate-sentinel"
    DROP_LABEL = "drop-label"


EXPECTED_CATEGORY: dict[Perturbation, Category] = {
    Perturbation.SUBSTITUTE: Category.MODIFIED_TOKEN,
    Perturbation.INSERT: Category.INSERTED_TOKEN,
    Perturbation.DELETE: Category.DELETED_TOKEN,
    Perturbation.DROP_SENTINEL: Category.MISSING_SENTINEL,
    Perturbation.DUPLICATE_SENTINEL: Category.DUPLICATE_SENTINEL,
    Perturbation.DROP_LABEL: Category.TAG_COUNT_MISMATCH,
}

APPLICABLE_FAMILIES: dict[Perturbation, tuple[Family, ...]] = {
    Perturbation.SUBSTITUTE: (Family.TAGGED_SPANS, Family.INPUT_TAG),
    Perturbation.INSERT: (Family.TAGGED_SPANS, Family.INPUT_TAG),
    Perturbation.DELETE: (Family.TAGGED_SPANS, Family.INPUT_TAG),
    Perturbation.DROP_SENTINEL: (Family.SENTINEL_TAG,),
    Perturbation.DUPLICATE_SENTINEL: (Family.SENTINEL_TAG,),
    Perturbation.DROP_LABEL: (Family.TAG_ONLY,),
}


def applicable(kind: Perturbation, fmt: FormatSpec) -> bool:
    if fmt.family not in APPLICABLE_FAMILIES[kind]:
        return False
    if kind is Perturbation.DELETE:
        return True  # caller must supply an example with >= 2 tokens
    return True


def _content_perturbed(
    example: TaggedExample, kind: Perturbation, rng: random.Random
) -> TaggedExample:
    tokens = list(example.tokens)
    labels = list(example.labels)
    if kind is Perturbation.SUBSTITUTE:
        at = rng.randrange(len(tokens))
        replacement = fresh_token(rng)
        while replacement == tokens[at]:
            replacement = fresh_token(rng)
        tokens[at] = replacement
    elif kind is Perturbation.INSERT:
        at = rng.randint(0, len(tokens))
        tokens.insert(at, fresh_token(rng))
        labels.insert(at, Label.outside())
    else:  # delete
        if len(tokens) < 2:
            raise ConfigError("delete perturbation needs at least 2 tokens")
        at = rng.randrange(len(tokens))
        del tokens[at]
        del labels[at]
    return TaggedExample(example.id, tuple(tokens), tuple(labels))


def _sentinel_slices(toks: list[str], fmt: FormatSpec) -> list[tuple[int, int]]:
    """[start, end) token ranges of each sentinel plus its trailing labels."""
    starts = [i for i, t in enumerate(toks) if fmt.parse_sentinel(t) is not None]
    slices = []
    for j, start in enumerate(starts):
        end = starts[j + 1] if j + 1 < len(starts) else len(toks)
        slices.append((start, end))
    return slices


def perturb_target(
    example: TaggedExample,
    fmt: FormatSpec,
    kind: Perturbation,
    rng: random.Random,
) -> str:
    """Return a corrupted target string for ``example`` under ``fmt``."""
    if not applicable(kind, fmt):
        raise ConfigError(
            f"perturbation {kind.value} does not apply to {fmt.label()}"
        )
    if kind in (Perturbation.SUBSTITUTE, Perturbation.INSERT, Perturbation.DELETE):
        return encode_target(_content_perturbed(example, kind, rng), fmt)

    toks = target_tokens(example, fmt)
    if kind is Perturbation.DROP_LABEL:
        del toks[rng.randrange(len(toks))]
        return " ".join(toks)

    slices = _sentinel_slices(toks, fmt)
    start, end = slices[rng.randrange(len(slices))]
    if kind is Perturbation.DROP_SENTINEL:
        del toks[start:end]
    else:  # duplicate sentinel pair, right after the original
        toks[end:end] = toks[start:end]
    return " ".join(toks)
