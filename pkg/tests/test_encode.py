import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagcast.core import Family, FormatSpec, SentinelSpacing, TaggedExample, all_format_specs
from tagcast.encode import encode_input, encode_pair, encode_target
from tagcast.errors import ReservedTokenCollision, SentinelOverflow
from tagcast.synth import random_example, random_tag_names

from conftest import GOLDEN_PLAIN_INPUT, GOLDEN_SENTINEL_INPUT, GOLDEN_TARGETS


class TestGoldenStrings:
    @pytest.mark.parametrize("label,expected", sorted(GOLDEN_TARGETS.items()))
    def test_target(self, running_example, label, expected):
        assert encode_target(running_example, FormatSpec.from_label(label)) == expected

    def test_plain_input(self, running_example):
        assert (
            encode_input(running_example, FormatSpec(Family.TAGGED_SPANS))
            == GOLDEN_PLAIN_INPUT
        )

    def test_sentinel_input(self, running_example):
        assert (
            encode_input(running_example, FormatSpec(Family.SENTINEL_TAG))
            == GOLDEN_SENTINEL_INPUT
        )

    def test_nospace_sentinel_input(self):
        ex = TaggedExample.from_strings("x", ["x"], ["O"])
        fmt = FormatSpec(Family.SENTINEL_TAG, sentinel_spacing=SentinelSpacing.NO_SPACE)
        assert encode_input(ex, fmt) == "<extra_id_0>x"

    def test_all_outside_extractive_target_is_empty(self):
        ex = TaggedExample.from_strings("x", ["hi", "there"], ["O", "O"])
        assert encode_target(ex, FormatSpec(Family.EXTRACTIVE_TAGGED_SPANS)) == ""


class TestErrors:
    def test_sentinel_overflow(self):
        ex = TaggedExample.from_strings("x", ["a"] * 5, ["O"] * 5)
        fmt = FormatSpec(Family.SENTINEL_TAG, max_sentinel_index=3)
        with pytest.raises(SentinelOverflow):
            encode_input(ex, fmt)
        with pytest.raises(SentinelOverflow):
            encode_target(ex, fmt)

    def test_max_index_is_inclusive(self):
        ex = TaggedExample.from_strings("x", ["a"] * 4, ["O"] * 4)
        fmt = FormatSpec(Family.SENTINEL_TAG, max_sentinel_index=3)
        assert encode_input(ex, fmt).endswith("<extra_id_3> a")

    @pytest.mark.parametrize("bad", ["</>", "<O>", "<extra_id_0>", "<TAG9>"])
    def test_reserved_token_collision(self, bad):
        ex = TaggedExample.from_strings("x", ["ok", bad], ["O", "O"])
        with pytest.raises(ReservedTokenCollision):
            encode_target(ex, FormatSpec(Family.TAGGED_SPANS))


def _ws_examples():
    rng = random.Random(7)
    tags = random_tag_names(rng, 6)
    return [random_example(rng, f"e{i}", tags, max_tokens=20) for i in range(40)]


class TestInvariants:
    def test_sentinel_privacy(self):
        for fmt in all_format_specs():
            if not fmt.family.uses_sentinels:
                continue
            for ex in _ws_examples():
                target_toks = set(encode_target(ex, fmt).split())
                assert not (target_toks & set(ex.tokens)), fmt.label()

    def test_no_double_spaces_or_padding(self):
        for fmt in all_format_specs():
            for ex in _ws_examples():
                pair = encode_pair(ex, fmt)
                for text in (pair.input_text, pair.target_text):
                    assert text == " ".join(text.split())

    def test_monotone_shrinkage(self):
        # Whitespace-token counts per example: simplified and extractive
        # variants never produce longer targets than their base format.
        orderings = [
            ("tagged-spans(so)", "tagged-spans"),
            ("input-tag(si)", "input-tag"),
            ("input-tag(si,so)", "input-tag(si)"),
            ("tag-only(si)", "tag-only"),
            ("sentinel-tag(si)", "sentinel-tag"),
            ("sentinel-tag(si,so)", "sentinel-tag(si)"),
            ("extractive-tagged-spans", "tagged-spans"),
            ("extractive-sentinel-tag", "sentinel-tag"),
            ("extractive-sentinel-tag(s)", "extractive-sentinel-tag"),
        ]
        for ex in _ws_examples():
            lengths = {
                fmt.label(): len(encode_target(ex, fmt).split())
                for fmt in all_format_specs()
            }
            for smaller, larger in orderings:
                assert lengths[smaller] <= lengths[larger], (ex.id, smaller, larger)

    def test_deterministic(self, running_example):
        for fmt in all_format_specs():
            assert encode_pair(running_example, fmt) == encode_pair(
                running_example, fmt
            )


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_tagged_spans_length_accounting(seed):
    # Target length is 2 markers per group plus one slot per token.
    rng = random.Random(seed)
    ex = random_example(rng, "e", random_tag_names(rng, 4), max_tokens=15)
    fmt = FormatSpec(Family.TAGGED_SPANS)
    spans = ex.spans()
    in_span = sum(sp.end - sp.start + 1 for sp in spans)
    n_groups = len(spans) + (ex.n_tokens - in_span)
    assert len(encode_target(ex, fmt).split()) == 2 * n_groups + ex.n_tokens
