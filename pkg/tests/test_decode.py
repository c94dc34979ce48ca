import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagcast.core import (
    Family,
    FormatSpec,
    Span,
    TagSet,
    all_format_specs,
)
from tagcast.decode import Category, decode, text_faithful_spans
from tagcast.encode import encode_target, gold_extractive_items
from tagcast.perturb import EXPECTED_CATEGORY, Perturbation, applicable, perturb_target
from tagcast.synth import random_example, random_tag_names

TS = FormatSpec(Family.TAGGED_SPANS)
IT = FormatSpec(Family.INPUT_TAG)
TO = FormatSpec(Family.TAG_ONLY)
ST = FormatSpec(Family.SENTINEL_TAG)
ETS = FormatSpec(Family.EXTRACTIVE_TAGGED_SPANS)
EST = FormatSpec(Family.EXTRACTIVE_SENTINEL_TAG)

GOLD_SPANS = (Span(1, 2, "ARTIST"), Span(5, 5, "PLAYLIST"))


class TestRoundTrip:
    def test_identity_all_formats(self, running_example):
        for fmt in all_format_specs():
            result = decode(running_example, encode_target(running_example, fmt), fmt)
            if fmt.family is Family.EXTRACTIVE_TAGGED_SPANS:
                assert result.extractive.items == gold_extractive_items(running_example)
            else:
                assert tuple(result.spans) == GOLD_SPANS
            assert not result.hallucination.flagged
            assert not result.parse_warnings

    def test_identity_random_examples(self):
        rng = random.Random(11)
        tags = random_tag_names(rng, 10)
        for i in range(30):
            ex = random_example(rng, f"e{i}", tags)
            for fmt in all_format_specs():
                result = decode(ex, encode_target(ex, fmt), fmt)
                if fmt.family is Family.EXTRACTIVE_TAGGED_SPANS:
                    assert result.extractive.items == gold_extractive_items(ex)
                else:
                    assert tuple(result.spans) == ex.spans()
                assert not result.hallucination.flagged


class TestInputRepeating:
    def test_modified_token(self, running_example):
        generated = (
            "<O> Add </> <ARTIST> Kent Jackson </> <O> to </> <O> the </> "
            "<PLAYLIST> Disney </> <O> soundtrack </>"
        )
        result = decode(running_example, generated, TS)
        assert tuple(result.spans) == GOLD_SPANS
        assert result.hallucination.flagged
        assert result.hallucination.detail == ((2, Category.MODIFIED_TOKEN),)

    def test_deleted_token(self, running_example):
        generated = (
            "<O> Add </> <ARTIST> Kent James </> <O> to </> <O> the </> "
            "<O> soundtrack </>"
        )
        result = decode(running_example, generated, TS)
        assert tuple(result.spans) == (Span(1, 2, "ARTIST"),)
        assert result.hallucination.categories == {Category.DELETED_TOKEN}
        assert (5, Category.DELETED_TOKEN) in result.hallucination.detail

    def test_inserted_token(self, running_example):
        generated = (
            "<O> Add </> <ARTIST> Kent James </> <O> to </> <O> the </> "
            "<PLAYLIST> Walt Disney </> <O> soundtrack </>"
        )
        result = decode(running_example, generated, TS)
        assert result.hallucination.categories == {Category.INSERTED_TOKEN}

    def test_index_generosity_keeps_span_set(self, running_example):
        # A modified token inside a correctly bracketed span leaves the
        # decoded indices untouched.
        generated = (
            "<O> Add <ARTIST> Kent <I-ARTIST> Jackson <O> to <O> the "
            "<PLAYLIST> Disney <O> soundtrack"
        )
        result = decode(running_example, generated, IT)
        assert tuple(result.spans) == GOLD_SPANS
        assert result.hallucination.flagged

    def test_text_faithful_filter(self, running_example):
        generated = (
            "<O> Add </> <ARTIST> Kent Jackson </> <O> to </> <O> the </> "
            "<PLAYLIST> Disney </> <O> soundtrack </>"
        )
        result = decode(running_example, generated, TS)
        assert text_faithful_spans(result, running_example) == (Span(5, 5, "PLAYLIST"),)

    def test_content_beyond_input_dropped(self, running_example):
        generated = encode_target(running_example, TS) + " <O> extra </> <ARTIST> junk </>"
        result = decode(running_example, generated, TS)
        assert tuple(result.spans) == GOLD_SPANS
        assert Category.INSERTED_TOKEN in result.hallucination.categories

    def test_span_truncated_at_input_length(self, running_example):
        generated = encode_target(running_example, TS).replace(
            "<O> soundtrack </>", "<GENRE> soundtrack beyond </>"
        )
        result = decode(running_example, generated, TS)
        assert Span(6, 6, "GENRE") in result.spans

    def test_unknown_tag_is_outside_with_warning(self, running_example):
        generated = (
            "<O> Add </> <WOBBLE> Kent James </> <O> to </> <O> the </> "
            "<PLAYLIST> Disney </> <O> soundtrack </>"
        )
        tag_set = TagSet(("ARTIST", "PLAYLIST"))
        result = decode(running_example, generated, TS, tag_set)
        assert tuple(result.spans) == (Span(5, 5, "PLAYLIST"),)
        assert not result.hallucination.flagged
        assert Category.UNKNOWN_LABEL in result.hallucination.categories
        assert result.parse_warnings

    def test_stray_close_and_unclosed_group(self, running_example):
        result = decode(running_example, "</> <ARTIST> Add", TS)
        assert Category.MALFORMED_MARKUP in result.hallucination.categories
        assert tuple(result.spans) == (Span(0, 0, "ARTIST"),)

    def test_eos_stripped(self, running_example):
        generated = encode_target(running_example, TS) + " </s>"
        result = decode(running_example, generated, TS)
        assert not result.hallucination.flagged

    def test_input_tag_bare_inside_with_no_open_tag(self, running_example):
        fmt = FormatSpec(Family.INPUT_TAG, simplified_inside=True)
        generated = "<I> Add <O> Kent <O> James <O> to <O> the <O> Disney <O> soundtrack"
        result = decode(running_example, generated, fmt)
        assert result.spans == ()
        assert not result.hallucination.flagged
        assert any("no open tag" in w for w in result.parse_warnings)


class TestTagOnly:
    def test_count_mismatch_short(self, running_example):
        result = decode(running_example, "O ARTIST I-ARTIST", TO)
        assert result.hallucination.categories == {Category.TAG_COUNT_MISMATCH}
        assert tuple(result.spans) == (Span(1, 2, "ARTIST"),)

    def test_count_mismatch_long(self, running_example):
        generated = encode_target(running_example, TO) + " O"
        result = decode(running_example, generated, TO)
        assert result.hallucination.flagged
        assert tuple(result.spans) == GOLD_SPANS

    def test_unknown_label_treated_as_outside(self, running_example):
        tag_set = TagSet(("ARTIST", "PLAYLIST"))
        result = decode(running_example, "O WHAT I-ARTIST O O PLAYLIST O", TO, tag_set)
        # The dangling inside after the unknown label is repaired to begin.
        assert tuple(result.spans) == (Span(2, 2, "ARTIST"), Span(5, 5, "PLAYLIST"))
        assert not result.hallucination.flagged
        assert Category.UNKNOWN_LABEL in result.hallucination.categories


class TestSentinelTag:
    def test_duplicate_and_missing(self, running_example):
        result = decode(
            running_example, "<extra_id_0> O <extra_id_5> PLAYLIST <extra_id_5> O", ST
        )
        assert tuple(result.spans) == (Span(5, 5, "PLAYLIST"),)
        assert result.hallucination.categories == {
            Category.DUPLICATE_SENTINEL,
            Category.MISSING_SENTINEL,
        }
        missing = {p for p, c in result.hallucination.detail if c is Category.MISSING_SENTINEL}
        assert missing == {1, 2, 3, 4, 6}

    def test_first_occurrence_wins(self, running_example):
        generated = encode_target(running_example, ST) + " <extra_id_1> O"
        result = decode(running_example, generated, ST)
        assert Span(1, 2, "ARTIST") in result.spans
        assert result.hallucination.categories == {Category.DUPLICATE_SENTINEL}

    def test_out_of_range(self, running_example):
        generated = encode_target(running_example, ST) + " <extra_id_9> O"
        result = decode(running_example, generated, ST)
        assert tuple(result.spans) == GOLD_SPANS
        assert Category.OUT_OF_RANGE_SENTINEL in result.hallucination.categories
        assert (9, Category.OUT_OF_RANGE_SENTINEL) in result.hallucination.detail

    def test_bare_inside_continues_open_tag(self, running_example):
        fmt = FormatSpec(Family.SENTINEL_TAG, simplified_inside=True)
        generated = (
            "<extra_id_0> O <extra_id_1> ARTIST <extra_id_2> I <extra_id_3> I "
            "<extra_id_4> O <extra_id_5> PLAYLIST <extra_id_6> O"
        )
        result = decode(running_example, generated, fmt)
        assert Span(1, 3, "ARTIST") in result.spans

    def test_bare_inside_with_no_open_tag_is_outside(self, running_example):
        fmt = FormatSpec(Family.SENTINEL_TAG, simplified_inside=True)
        generated = (
            "<extra_id_0> I <extra_id_1> O <extra_id_2> O <extra_id_3> O "
            "<extra_id_4> O <extra_id_5> O <extra_id_6> O"
        )
        result = decode(running_example, generated, fmt)
        assert result.spans == ()
        assert not result.hallucination.flagged

    def test_no_label_means_outside_even_without_so(self, running_example):
        generated = " ".join(f"<extra_id_{k}>" for k in range(7))
        result = decode(running_example, generated, ST)
        assert result.spans == ()
        assert not result.hallucination.flagged


class TestExtractive:
    def test_phrase_multiset(self, running_example):
        result = decode(running_example, "<ARTIST> Kent James <PLAYLIST> Disney", ETS)
        assert result.extractive.items == (
            ("ARTIST", "Kent James"),
            ("PLAYLIST", "Disney"),
        )
        assert result.spans is None
        assert not result.hallucination.flagged

    def test_unlocatable_phrase_flags(self, running_example):
        result = decode(running_example, "<ARTIST> Kent Jackson", ETS)
        assert result.hallucination.flagged
        assert result.hallucination.categories == {Category.INSERTED_TOKEN}
        assert result.extractive.items == (("ARTIST", "Kent Jackson"),)

    def test_non_contiguous_phrase_flags(self, running_example):
        result = decode(running_example, "<ARTIST> Kent soundtrack", ETS)
        assert result.hallucination.flagged

    def test_wrong_tag_right_text_is_not_hallucination(self, running_example):
        result = decode(running_example, "<PLAYLIST> Kent James", ETS)
        assert not result.hallucination.flagged
        assert result.extractive.items == (("PLAYLIST", "Kent James"),)

    def test_empty_target(self, running_example):
        result = decode(running_example, "", ETS)
        assert result.extractive.items == ()
        assert not result.hallucination.flagged

    def test_sentinel_spans_map_to_indices(self, running_example):
        result = decode(
            running_example,
            "<extra_id_1> ARTIST <extra_id_2> I-ARTIST <extra_id_5> PLAYLIST",
            EST,
        )
        assert tuple(result.spans) == GOLD_SPANS
        assert result.extractive.items == (
            ("ARTIST", "Kent James"),
            ("PLAYLIST", "Disney"),
        )

    def test_simplified_continuation(self, running_example):
        fmt = FormatSpec(Family.EXTRACTIVE_SENTINEL_TAG, extractive_simplified=True)
        result = decode(
            running_example, "<extra_id_1> ARTIST <extra_id_2> <extra_id_5> PLAYLIST", fmt
        )
        assert tuple(result.spans) == GOLD_SPANS

    def test_non_contiguous_continuation_skipped(self, running_example):
        fmt = FormatSpec(Family.EXTRACTIVE_SENTINEL_TAG, extractive_simplified=True)
        result = decode(running_example, "<extra_id_1> ARTIST <extra_id_4>", fmt)
        assert tuple(result.spans) == (Span(1, 1, "ARTIST"),)
        assert not result.hallucination.flagged
        assert result.parse_warnings

    def test_duplicate_and_out_of_range_flag(self, running_example):
        result = decode(
            running_example,
            "<extra_id_1> ARTIST <extra_id_1> ARTIST <extra_id_9> PLAYLIST",
            EST,
        )
        assert result.hallucination.categories == {
            Category.DUPLICATE_SENTINEL,
            Category.OUT_OF_RANGE_SENTINEL,
        }
        assert tuple(result.spans) == (Span(1, 1, "ARTIST"),)

    def test_dangling_inside_becomes_begin(self, running_example):
        result = decode(running_example, "<extra_id_5> I-PLAYLIST", EST)
        assert tuple(result.spans) == (Span(5, 5, "PLAYLIST"),)


class TestPerturbations:
    CASES = [
        (Perturbation.SUBSTITUTE, (TS, IT)),
        (Perturbation.INSERT, (TS, IT)),
        (Perturbation.DELETE, (TS, IT)),
        (Perturbation.DROP_SENTINEL, (ST,)),
        (Perturbation.DUPLICATE_SENTINEL, (ST,)),
        (Perturbation.DROP_LABEL, (TO,)),
    ]

    @pytest.mark.parametrize("kind,formats", CASES)
    def test_single_fault_flags_exact_category(self, kind, formats):
        rng = random.Random(hash(kind) & 0xFFFF)
        tags = random_tag_names(rng, 5)
        expected = EXPECTED_CATEGORY[kind]
        for i in range(50):
            ex = random_example(rng, f"e{i}", tags, min_tokens=2, max_tokens=15)
            for fmt in formats:
                assert applicable(kind, fmt)
                corrupted = perturb_target(ex, fmt, kind, rng)
                result = decode(ex, corrupted, fmt)
                assert result.hallucination.flagged, (kind, fmt.label(), corrupted)
                assert result.hallucination.categories == {expected}, (
                    kind,
                    fmt.label(),
                    corrupted,
                    result.hallucination.categories,
                )

    def test_clean_targets_never_flag(self):
        rng = random.Random(3)
        tags = random_tag_names(rng, 5)
        for i in range(30):
            ex = random_example(rng, f"e{i}", tags)
            for fmt in all_format_specs():
                result = decode(ex, encode_target(ex, fmt), fmt)
                assert not result.hallucination.flagged


# Fuzz smoke test: decode must never raise, whatever the bytes decode to.
@given(st.binary(min_size=0, max_size=80))
@settings(max_examples=500, deadline=None)
def test_decode_never_raises(data):
    from tagcast.core import TaggedExample

    ex = TaggedExample.from_strings(
        "f", ["alpha", "beta", "gamma"], ["O", "B-A", "O"]
    )
    text = data.decode("latin-1")
    for fmt in all_format_specs():
        decode(ex, text, fmt)
