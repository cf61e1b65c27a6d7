import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sage_rag.errors import ContractViolation
from sage_rag.segmenter import segment_coarse, sentence_spans, split_sentences


def reconstruct(text: str) -> str:
    spans = sentence_spans(text)
    out, pos = [], 0
    for s, e in spans:
        out.append(text[pos:s])  # separator
        assert text[pos:s].strip() == ""
        out.append(text[s:e])
        pos = e
    out.append(text[pos:])
    assert text[pos:].strip() == ""
    return "".join(out)


def test_basic_split():
    assert split_sentences("A cat. A dog.") == ["A cat.", "A dog."]
    assert split_sentences("Really? Yes! Fine.") == ["Really?", "Yes!", "Fine."]


def test_abbreviation_suppressed():
    assert split_sentences("Dr. Smith left.") == ["Dr. Smith left."]
    assert split_sentences("See e.g. this one. Next.") == ["See e.g. this one.", "Next."]


def test_no_terminator_single_sentence():
    assert split_sentences("no terminator here") == ["no terminator here"]
    assert split_sentences("") == []
    assert split_sentences("   ") == []


def test_terminator_needs_following_whitespace():
    assert split_sentences("Version 3.5 is out. Ok") == ["Version 3.5 is out.", "Ok"]


def test_round_trip_random_concatenations():
    rng = random.Random(3)
    pieces = ["Hello there.", "Dr. No waits!", "What?", "plain words", "Mr. X. Y", "e.g. this", "3.14 is pi."]
    seps = [" ", "  ", "\t", " \n "]
    for _ in range(1000):
        text = rng.choice(["", " "]) + "".join(rng.choice(pieces) + rng.choice(seps) for _ in range(rng.randint(0, 8)))
        assert reconstruct(text) == text


@given(st.text(alphabet="ab .!?\n\t", max_size=80))
def test_round_trip_property(text):
    assert reconstruct(text) == text


def _sentence(n_tokens: int) -> str:
    return " ".join(["w"] * (n_tokens - 1)) + "."  # n-1 words + period = n tokens


def test_coarse_greedy_packing():
    text = " ".join(_sentence(100) for _ in range(10))
    chunks = segment_coarse(text, 400)
    assert [c.sentence_end - c.sentence_start for c in chunks] == [4, 4, 2]
    assert [c.token_count for c in chunks] == [400, 400, 200]


def test_coarse_oversize_sentence_kept_whole():
    text = _sentence(500)
    chunks = segment_coarse(text, 400)
    assert len(chunks) == 1 and chunks[0].text == text and chunks[0].token_count == 500


def test_coarse_oversize_between_small():
    text = " ".join([_sentence(50), _sentence(500), _sentence(50)])
    assert [c.token_count for c in segment_coarse(text, 400)] == [50, 500, 50]


def test_coarse_empty_and_bad_l():
    assert segment_coarse("", 400) == []
    with pytest.raises(ContractViolation):
        segment_coarse("x.", 8)
