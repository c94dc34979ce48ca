"""Codec and evaluation toolkit for casting BIO sequence tagging as
seq2seq text, parsing generated targets back into spans, detecting
hallucinations, and scoring predictions."""

from .core import (
    Family,
    FormatSpec,
    Label,
    LabelKind,
    SentinelSpacing,
    Span,
    TagSet,
    TaggedExample,
    all_format_specs,
    labels_to_spans,
    repair_labels,
    spans_to_labels,
)
from .decode import (
    Category,
    DecodeResult,
    ExtractivePrediction,
    HallucinationReport,
    decode,
    text_faithful_spans,
)
from .encode import (
    EncodedPair,
    encode_input,
    encode_pair,
    encode_target,
    gold_extractive_items,
)
from .errors import (
    ConfigError,
    DataError,
    DuplicateId,
    EmptyCandidates,
    EmptyDataset,
    InadmissibleFormat,
    LabelSyntax,
    MalformedLine,
    OverlappingSpans,
    ReservedTokenCollision,
    SentinelOverflow,
    SpanOutOfRange,
    TagcastError,
)
from .metrics import (
    F1Scores,
    MetricsReport,
    TagCounts,
    build_report,
    extractive_f1,
    extractive_perfect,
    hallucination_rate,
    hit_at_k,
    perfect_metric,
    span_f1,
)
from .perturb import EXPECTED_CATEGORY, Perturbation, perturb_target
from .stats import (
    BYTE_TOKENIZER,
    WHITESPACE_TOKENIZER,
    DatasetStats,
    LengthStats,
    LengthTokenizer,
    dataset_stats,
    length_stats,
    nearest_rank_p99,
    tag_entropy,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
