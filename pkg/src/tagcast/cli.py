"""Command-line interface.

Subcommands: encode, decode, eval, stats, roundtrip. Data goes to stdout
or --output; diagnostics go to stderr, so pipelines compose. Exit codes:
0 success, 1 assertion/identity failure, 2 usage or config error, 3 data
error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from . import dataio, metrics
from .core import Family, FormatSpec, SentinelSpacing, TagSet, TaggedExample, all_format_specs
from .decode import DEFAULT_EOS, DecodeResult, decode, text_faithful_spans
from .encode import (
    check_reserved_tokens,
    encode_pair,
    encode_target,
    gold_extractive_items,
)
from .errors import ConfigError, DataError, EmptyDataset, TagcastError
from .perturb import EXPECTED_CATEGORY, Perturbation, applicable, perturb_target
from .stats import TOKENIZERS, dataset_stats, length_stats

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DATA = 3

WORKERS_ENV = "TAGCAST_WORKERS"

T = TypeVar("T")
U = TypeVar("U")


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return value


def parallel_map(fn: Callable[[T], U], items: Sequence[T]) -> list[U]:
    """Order-preserving map, threaded when TAGCAST_WORKERS > 1."""
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _add_format_args(parser: argparse.ArgumentParser, required: bool) -> None:
    group = parser.add_argument_group("format")
    group.add_argument(
        "--family",
        choices=[f.value for f in Family],
        required=required,
        help="target format family",
    )
    group.add_argument("--si", action="store_true", help="simplified inside labels")
    group.add_argument("--so", action="store_true", help="omit outside labels")
    group.add_argument(
        "--extractive-simplified",
        action="store_true",
        help="bare continuation sentinels (extractive sentinel family only)",
    )
    group.add_argument("--sentinel-template", default=None, metavar="TPL")
    group.add_argument("--spacing", choices=["space", "nospace"], default="space")
    group.add_argument("--max-sentinel", type=int, default=None, metavar="K")


def _format_from_args(args) -> FormatSpec:
    overrides = {}
    if args.sentinel_template is not None:
        overrides["sentinel_template"] = args.sentinel_template
    if args.max_sentinel is not None:
        overrides["max_sentinel_index"] = args.max_sentinel
    return FormatSpec(
        Family(args.family),
        simplified_inside=args.si,
        simplified_outside=args.so,
        extractive_simplified=args.extractive_simplified,
        sentinel_spacing=SentinelSpacing(args.spacing),
        **overrides,
    )


def _selected_formats(args) -> list[FormatSpec]:
    if args.family is not None:
        return [_format_from_args(args)]
    overrides = {}
    if args.sentinel_template is not None:
        overrides["sentinel_template"] = args.sentinel_template
    if args.max_sentinel is not None:
        overrides["max_sentinel_index"] = args.max_sentinel
    return list(
        all_format_specs(
            sentinel_spacing=SentinelSpacing(args.spacing), **overrides
        )
    )


@contextlib.contextmanager
def _open_read(path: str):
    if path == "-":
        yield sys.stdin
    else:
        with open(path, "r", encoding="utf-8") as fh:
            yield fh


@contextlib.contextmanager
def _open_write(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _read_corpus(path: str, fmt: FormatSpec | None) -> list[TaggedExample]:
    with _open_read(path) as fh:
        examples = dataio.sniff_examples(fh, fmt)
    if not examples:
        raise EmptyDataset(f"no examples in {path!r}")
    return examples


def _corpus_tag_set(examples: Sequence[TaggedExample]) -> TagSet:
    tags: dict[str, None] = {}
    for ex in examples:
        for t in ex.tag_names():
            tags.setdefault(t)
    return TagSet(tuple(sorted(tags)))


def cmd_encode(args) -> int:
    fmt = _format_from_args(args)
    examples = _read_corpus(args.input, fmt)
    pairs = parallel_map(lambda ex: encode_pair(ex, fmt), examples)
    with _open_write(args.output) as out:
        dataio.write_encoded(pairs, out, mode=args.output_mode)
    print(f"encoded {len(pairs)} examples as {fmt.label()}", file=sys.stderr)
    print(length_stats(pairs).to_text(), file=sys.stderr)
    return EXIT_OK


def _match_predictions(
    examples: Sequence[TaggedExample], records: Sequence[dataio.PredictionRecord]
) -> list[dataio.PredictionRecord]:
    by_id = {r.id: r for r in records}
    missing = [ex.id for ex in examples if ex.id not in by_id]
    extra = sorted(set(by_id) - {ex.id for ex in examples})
    if missing or extra:
        raise DataError(
            f"prediction ids do not match corpus ids "
            f"(missing: {missing[:5]}, extra: {extra[:5]})"
        )
    return [by_id[ex.id] for ex in examples]


def _decode_result_json(ex: TaggedExample, fmt: FormatSpec, result: DecodeResult) -> dict:
    obj: dict = {"id": ex.id, "format": fmt.label()}
    if result.spans is not None:
        obj["spans"] = [[sp.start, sp.end, sp.tag] for sp in result.spans]
    else:
        obj["spans"] = None
    obj["items"] = list(map(list, result.extractive.items)) if result.extractive else None
    obj["reconstructed"] = (
        list(result.reconstructed_tokens)
        if result.reconstructed_tokens is not None
        else None
    )
    obj["hallucination"] = {
        "flagged": result.hallucination.flagged,
        "categories": sorted(c.value for c in result.hallucination.categories),
        "detail": [[pos, cat.value] for pos, cat in result.hallucination.detail],
    }
    obj["warnings"] = list(result.parse_warnings)
    return obj


def cmd_decode(args) -> int:
    fmt = _format_from_args(args)
    examples = _read_corpus(args.gold, fmt)
    with _open_read(args.pred) as fh:
        records = _match_predictions(examples, dataio.read_predictions(fh))
    tag_set = _corpus_tag_set(examples)
    results = parallel_map(
        lambda pair: decode(pair[0], pair[1].candidates[0], fmt, tag_set, eos=args.eos),
        list(zip(examples, records)),
    )
    with _open_write(args.output) as out:
        for ex, result in zip(examples, results):
            out.write(
                json.dumps(_decode_result_json(ex, fmt, result), ensure_ascii=False)
                + "\n"
            )
    flagged = sum(1 for r in results if r.hallucination.flagged)
    print(
        f"decoded {len(results)} predictions, {flagged} flagged as hallucinated",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    fmt = _format_from_args(args)
    examples = _read_corpus(args.gold, fmt)
    with _open_read(args.pred) as fh:
        records = _match_predictions(examples, dataio.read_predictions(fh))
    tag_set = _corpus_tag_set(examples)
    index_eval = args.index_eval == "on"
    extractive = fmt.family is Family.EXTRACTIVE_TAGGED_SPANS

    def decode_one(pair: tuple[TaggedExample, dataio.PredictionRecord]):
        ex, record = pair
        top = decode(ex, record.candidates[0], fmt, tag_set, eos=args.eos)
        rest = [
            decode(ex, cand, fmt, tag_set, eos=args.eos)
            for cand in record.candidates[1 : args.k or 1]
        ]
        return top, [top, *rest]

    decoded = parallel_map(decode_one, list(zip(examples, records)))

    golds = []
    preds = []
    reports = []
    hits: list[bool] | None = [] if args.k else None
    for ex, (top, cands) in zip(examples, decoded):
        reports.append(top.hallucination)
        if extractive:
            gold = gold_extractive_items(ex)
            golds.append(gold)
            preds.append(top.extractive.items if top.extractive else ())
        else:
            gold = ex.spans()
            golds.append(gold)
            if index_eval or top.spans is None:
                preds.append(top.spans or ())
            else:
                preds.append(text_faithful_spans(top, ex))
        if hits is not None:
            hits.append(
                metrics.hit_at_k(gold, cands, args.k, extractive=extractive)
            )

    report = metrics.build_report(
        golds, preds, reports, extractive=extractive, hits=hits, k=args.k
    )
    with _open_write(args.output) as out:
        json.dump(report.to_json_dict(), out, ensure_ascii=False, indent=2)
        out.write("\n")
    print(report.to_text(), file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    examples = _read_corpus(args.input, None)
    ds = dataset_stats(examples)
    tokenizer = TOKENIZERS[args.tokenizer]
    formats = _selected_formats(args)
    pairs = []
    for fmt in formats:
        pairs.extend(parallel_map(lambda ex: encode_pair(ex, fmt), examples))
    ls = length_stats(pairs, tokenizer)
    payload = {
        "schema": 1,
        "dataset": ds.to_json_dict(),
        "lengths": ls.to_json_dict(),
    }
    with _open_write(args.output) as out:
        json.dump(payload, out, ensure_ascii=False, indent=2)
        out.write("\n")
    print(
        f"examples {ds.n_examples}  tokens/ex {ds.tokens_per_example:.2f}  "
        f"spans/ex {ds.spans_per_example:.2f}  % tokens tagged "
        f"{ds.pct_tokens_tagged:.2f}  tag classes {ds.n_tag_classes}  "
        f"tag entropy {ds.tag_entropy:.3f} bits",
        file=sys.stderr,
    )
    print(ls.to_text(), file=sys.stderr)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    formats = _selected_formats(args)
    failures = 0
    checked = 0
    rng = random.Random(args.seed)
    inject = Perturbation(args.inject) if args.inject else None
    examples = _read_corpus(args.input, formats[0])
    # Ingestion rejects tokens colliding with any swept format's markup.
    for fmt in formats[1:]:
        for ex in examples:
            check_reserved_tokens(ex, fmt)
    tag_set = _corpus_tag_set(examples)

    for fmt in formats:
        for ex in examples:
            if inject is not None:
                if not applicable(inject, fmt):
                    continue
                if inject is Perturbation.DELETE and ex.n_tokens < 2:
                    continue
                target = perturb_target(ex, fmt, inject, rng)
            else:
                target = encode_target(ex, fmt)
            result = decode(ex, target, fmt, tag_set)
            checked += 1
            if fmt.family is Family.EXTRACTIVE_TAGGED_SPANS:
                identical = (
                    result.extractive is not None
                    and result.extractive.items == gold_extractive_items(ex)
                )
            else:
                identical = tuple(result.spans or ()) == ex.spans()
            clean = not result.hallucination.flagged
            if not identical or not clean:
                failures += 1
                cats = sorted(c.value for c in result.hallucination.categories)
                print(
                    f"{ex.id} {fmt.label()}: "
                    f"{'spans differ' if not identical else 'identity holds'}"
                    f"{', hallucination flagged ' + str(cats) if not clean else ''}",
                    file=sys.stderr,
                )
    print(
        f"roundtrip checked {checked} (example, format) combinations, "
        f"{failures} failures",
        file=sys.stderr,
    )
    return EXIT_FAILURE if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tagcast",
        description="Convert BIO corpora to seq2seq formats, parse generated "
        "targets back into spans, and score predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="corpus -> (input, target) pairs")
    _add_format_args(p, required=True)
    p.add_argument("--input", default="-", help="corpus file (CoNLL or JSONL)")
    p.add_argument("--output", default="-")
    p.add_argument("--output-mode", choices=["jsonl", "tsv"], default="jsonl")
    p.set_defaults(handler=cmd_encode)

    p = sub.add_parser("decode", help="generated targets -> span predictions")
    _add_format_args(p, required=True)
    p.add_argument("--gold", required=True, help="corpus the inputs came from")
    p.add_argument("--pred", required=True, help="predictions (JSONL or plain text)")
    p.add_argument("--output", default="-")
    p.add_argument("--eos", default=DEFAULT_EOS)
    p.set_defaults(handler=cmd_decode)

    p = sub.add_parser("eval", help="score predictions against a gold corpus")
    _add_format_args(p, required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--k", type=int, default=None, help="also report hit@K")
    p.add_argument("--index-eval", choices=["on", "off"], default="on")
    p.add_argument("--eos", default=DEFAULT_EOS)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("stats", help="dataset and sequence-length statistics")
    _add_format_args(p, required=False)
    p.add_argument("--input", default="-")
    p.add_argument("--output", default="-")
    p.add_argument("--tokenizer", choices=sorted(TOKENIZERS), default="whitespace")
    p.add_argument(
        "--formats",
        choices=["all"],
        default="all",
        help="sweep every admissible format (default when --family is absent)",
    )
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("roundtrip", help="verify decode(encode(x)) identity")
    _add_format_args(p, required=False)
    p.add_argument("--input", default="-")
    p.add_argument(
        "--formats",
        choices=["all"],
        default="all",
    )
    p.add_argument(
        "--inject",
        choices=[k.value for k in Perturbation],
        default=None,
        help="corrupt each target with one fault and expect detection",
    )
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_roundtrip)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"tagcast: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"tagcast: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TagcastError as exc:
        print(f"tagcast: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
