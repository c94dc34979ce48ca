import pytest

from tagcast.core import TaggedExample

RUNNING_TOKENS = ("Add", "Kent", "James", "to", "the", "Disney", "soundtrack")
RUNNING_LABELS = ("O", "B-ARTIST", "I-ARTIST", "O", "O", "B-PLAYLIST", "O")

# Byte-exact target strings for the running example, one per format.
GOLDEN_TARGETS = {
    "tagged-spans": (
        "<O> Add </> <ARTIST> Kent James </> <O> to </> <O> the </> "
        "<PLAYLIST> Disney </> <O> soundtrack </>"
    ),
    "tagged-spans(so)": (
        "Add <ARTIST> Kent James </> to the <PLAYLIST> Disney </> soundtrack"
    ),
    "input-tag": (
        "<O> Add <ARTIST> Kent <I-ARTIST> James <O> to <O> the "
        "<PLAYLIST> Disney <O> soundtrack"
    ),
    "input-tag(si)": (
        "<O> Add <ARTIST> Kent <I> James <O> to <O> the "
        "<PLAYLIST> Disney <O> soundtrack"
    ),
    "input-tag(si,so)": "Add <ARTIST> Kent <I> James to the <PLAYLIST> Disney soundtrack",
    "tag-only": "O ARTIST I-ARTIST O O PLAYLIST O",
    "tag-only(si)": "O ARTIST I O O PLAYLIST O",
    "sentinel-tag": (
        "<extra_id_0> O <extra_id_1> ARTIST <extra_id_2> I-ARTIST "
        "<extra_id_3> O <extra_id_4> O <extra_id_5> PLAYLIST <extra_id_6> O"
    ),
    "sentinel-tag(si)": (
        "<extra_id_0> O <extra_id_1> ARTIST <extra_id_2> I "
        "<extra_id_3> O <extra_id_4> O <extra_id_5> PLAYLIST <extra_id_6> O"
    ),
    "sentinel-tag(si,so)": (
        "<extra_id_0> <extra_id_1> ARTIST <extra_id_2> I "
        "<extra_id_3> <extra_id_4> <extra_id_5> PLAYLIST <extra_id_6>"
    ),
    "extractive-tagged-spans": "<ARTIST> Kent James <PLAYLIST> Disney",
    "extractive-sentinel-tag": (
        "<extra_id_1> ARTIST <extra_id_2> I-ARTIST <extra_id_5> PLAYLIST"
    ),
    "extractive-sentinel-tag(s)": "<extra_id_1> ARTIST <extra_id_2> <extra_id_5> PLAYLIST",
}

GOLDEN_PLAIN_INPUT = "Add Kent James to the Disney soundtrack"
GOLDEN_SENTINEL_INPUT = (
    "<extra_id_0> Add <extra_id_1> Kent <extra_id_2> James <extra_id_3> to "
    "<extra_id_4> the <extra_id_5> Disney <extra_id_6> soundtrack"
)


@pytest.fixture
def running_example() -> TaggedExample:
    return TaggedExample.from_strings("run", RUNNING_TOKENS, RUNNING_LABELS)
