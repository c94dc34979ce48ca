"""Readers and writers for the on-disk formats.

All readers accept text-mode streams, tolerate CRLF line endings and a
leading BOM, and report the 1-based line number on error. Writers emit
LF-terminated UTF-8 with a fixed field order so output is byte-stable.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass
from typing import IO, Iterable

from .core import FormatSpec, Label, TaggedExample, repair_labels
from .encode import EncodedPair
from .errors import (
    DuplicateId,
    EmptyCandidates,
    LabelSyntax,
    MalformedLine,
    ReservedTokenCollision,
)

_ID_COMMENT = "# id:"


def _parse_bio(text: str, line_no: int) -> Label:
    try:
        return Label.from_string(text)
    except ValueError as exc:
        raise LabelSyntax(str(exc), line_no) from None


def _check_token(token: str, fmt: FormatSpec | None, line_no: int | None) -> None:
    if fmt is not None and fmt.token_is_reserved(token):
        raise ReservedTokenCollision(
            f"token {token!r} collides with {fmt.label()} markup", line_no
        )


def _build_example(
    id: str,
    tokens: list[str],
    labels: list[Label],
    first_line: int,
) -> TaggedExample:
    _, changed = repair_labels(labels)
    if changed:
        warnings.warn(
            f"example {id!r} (line {first_line}): repaired dangling inside "
            f"label at positions {list(changed)}"
        )
    return TaggedExample(id, tuple(tokens), tuple(labels))


def _split_conll_line(line: str, line_no: int) -> tuple[str, str]:
    # Tab-delimited when a tab is present, otherwise the last run of spaces.
    if "\t" in line:
        token, _, label = line.partition("\t")
    else:
        token, _, label = line.rpartition(" ")
    token = token.strip()
    label = label.strip()
    if not token or not label:
        raise MalformedLine(f"expected 'token<TAB or space>label': {line!r}", line_no)
    return token, label


def read_conll(
    stream: IO[str], format_spec: FormatSpec | None = None
) -> list[TaggedExample]:
    """Read token/label lines with blank-line example separators.

    A ``# id: NAME`` comment names the following example; other examples
    get sequential ``ex{n}`` ids by position.
    """
    examples: list[TaggedExample] = []
    tokens: list[str] = []
    labels: list[Label] = []
    pending_id: str | None = None
    first_line = 0

    def flush():
        nonlocal tokens, labels, pending_id
        if tokens:
            id = pending_id if pending_id is not None else f"ex{len(examples)}"
            examples.append(_build_example(id, tokens, labels, first_line))
        tokens, labels, pending_id = [], [], None

    for line_no, raw in enumerate(stream, 1):
        line = raw.lstrip("﻿").rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if line.startswith(_ID_COMMENT):
            pending_id = line[len(_ID_COMMENT):].strip()
            continue
        token, label_text = _split_conll_line(line, line_no)
        _check_token(token, format_spec, line_no)
        if not tokens:
            first_line = line_no
        tokens.append(token)
        labels.append(_parse_bio(label_text, line_no))
    flush()
    return examples


def read_jsonl_examples(
    stream: IO[str], format_spec: FormatSpec | None = None
) -> list[TaggedExample]:
    """Read one ``{"id"?, "tokens", "labels"}`` object per line."""
    examples: list[TaggedExample] = []
    for line_no, raw in enumerate(stream, 1):
        line = raw.lstrip("﻿").strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(f"bad JSON: {exc}", line_no) from None
        if not isinstance(obj, dict) or "tokens" not in obj or "labels" not in obj:
            raise MalformedLine("object must have 'tokens' and 'labels'", line_no)
        tokens = obj["tokens"]
        label_texts = obj["labels"]
        if (
            not isinstance(tokens, list)
            or not isinstance(label_texts, list)
            or not all(isinstance(t, str) for t in tokens)
            or not all(isinstance(t, str) for t in label_texts)
        ):
            raise MalformedLine("'tokens' and 'labels' must be string lists", line_no)
        if len(tokens) != len(label_texts):
            raise MalformedLine(
                f"{len(tokens)} tokens vs {len(label_texts)} labels", line_no
            )
        for tok in tokens:
            _check_token(tok, format_spec, line_no)
        labels = [_parse_bio(t, line_no) for t in label_texts]
        id = obj.get("id", f"ex{len(examples)}")
        try:
            examples.append(_build_example(id, tokens, labels, line_no))
        except ValueError as exc:
            raise MalformedLine(str(exc), line_no) from None
    return examples


def sniff_examples(
    stream: IO[str], format_spec: FormatSpec | None = None
) -> list[TaggedExample]:
    """Read either JSONL or CoNLL, deciding from the first non-blank line."""
    text = stream.read()
    head = next((ln for ln in text.splitlines() if ln.strip()), "")
    if head.lstrip("﻿").lstrip().startswith("{"):
        return read_jsonl_examples(io.StringIO(text), format_spec)
    return read_conll(io.StringIO(text), format_spec)


def write_examples_conll(examples: Iterable[TaggedExample], stream: IO[str]) -> None:
    for ex in examples:
        stream.write(f"{_ID_COMMENT} {ex.id}\n")
        for tok, lab in zip(ex.tokens, ex.labels):
            stream.write(f"{tok}\t{lab.to_string()}\n")
        stream.write("\n")


_FORMAT_DEFAULTS = FormatSpec.__dataclass_fields__


def _format_to_json(fmt: FormatSpec) -> tuple[str, dict]:
    options = {}
    for name in (
        "sentinel_template",
        "open_tag_template",
        "inside_tag_template",
        "close_marker",
        "sentinel_spacing",
        "max_sentinel_index",
    ):
        value = getattr(fmt, name)
        if value != _FORMAT_DEFAULTS[name].default:
            options[name] = value.value if hasattr(value, "value") else value
    return fmt.label(), options


def _format_from_json(label: str, options: dict) -> FormatSpec:
    from .core import SentinelSpacing

    if "sentinel_spacing" in options:
        options = dict(options)
        options["sentinel_spacing"] = SentinelSpacing(options["sentinel_spacing"])
    return FormatSpec.from_label(label, **options)


def write_encoded(
    pairs: Iterable[EncodedPair], stream: IO[str], mode: str = "jsonl"
) -> None:
    """Write encoded pairs as JSONL (self-describing) or TSV."""
    if mode == "tsv":
        for pair in pairs:
            stream.write(f"{pair.id}\t{pair.input_text}\t{pair.target_text}\n")
        return
    if mode != "jsonl":
        raise ValueError(f"unknown mode {mode!r}")
    for pair in pairs:
        label, options = _format_to_json(pair.format)
        obj = {
            "id": pair.id,
            "input": pair.input_text,
            "target": pair.target_text,
            "format": label,
        }
        if options:
            obj["format_options"] = options
        stream.write(json.dumps(obj, ensure_ascii=False) + "\n")


def read_encoded(
    stream: IO[str], mode: str = "jsonl", format_spec: FormatSpec | None = None
) -> list[EncodedPair]:
    """Read pairs written by write_encoded.

    TSV carries no format column, so ``format_spec`` is required there.
    """
    pairs: list[EncodedPair] = []
    if mode == "tsv":
        if format_spec is None:
            raise ValueError("reading TSV pairs requires a format_spec")
        for line_no, raw in enumerate(stream, 1):
            line = raw.lstrip("﻿").rstrip("\r\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise MalformedLine(f"expected 3 tab fields, got {len(fields)}", line_no)
            pairs.append(EncodedPair(fields[0], fields[1], fields[2], format_spec))
        return pairs
    if mode != "jsonl":
        raise ValueError(f"unknown mode {mode!r}")
    for line_no, raw in enumerate(stream, 1):
        line = raw.lstrip("﻿").strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(f"bad JSON: {exc}", line_no) from None
        try:
            fmt = _format_from_json(obj["format"], obj.get("format_options", {}))
            pairs.append(EncodedPair(obj["id"], obj["input"], obj["target"], fmt))
        except KeyError as exc:
            raise MalformedLine(f"missing field {exc}", line_no) from None
    return pairs


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    candidates: tuple[str, ...]

    def __post_init__(self):
        if not self.candidates:
            raise EmptyCandidates(f"prediction {self.id!r} has no candidates")


def read_predictions(stream: IO[str]) -> list[PredictionRecord]:
    """Read JSONL ``{"id", "candidates"}`` records or one-best plain text.

    Plain-text lines get sequential ``ex{n}`` ids matching corpus order.
    """
    text = stream.read()
    lines = text.splitlines()
    head = next((ln for ln in lines if ln.strip()), "")
    records: list[PredictionRecord] = []
    seen: set[str] = set()

    def add(record: PredictionRecord, line_no: int):
        if record.id in seen:
            raise DuplicateId(f"duplicate prediction id {record.id!r}", line_no)
        seen.add(record.id)
        records.append(record)

    if head.lstrip("﻿").lstrip().startswith("{"):
        for line_no, line in enumerate(lines, 1):
            line = line.lstrip("﻿").strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(f"bad JSON: {exc}", line_no) from None
            if not isinstance(obj, dict) or "candidates" not in obj:
                raise MalformedLine("object must have 'candidates'", line_no)
            cands = obj["candidates"]
            if not isinstance(cands, list) or not all(
                isinstance(c, str) for c in cands
            ):
                raise MalformedLine("'candidates' must be a string list", line_no)
            if not cands:
                raise EmptyCandidates("empty candidate list", line_no)
            id = obj.get("id", f"ex{len(records)}")
            add(PredictionRecord(id, tuple(cands)), line_no)
    else:
        for line_no, line in enumerate(lines, 1):
            add(PredictionRecord(f"ex{len(records)}", (line,)), line_no)
    return records
