import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sage_rag.errors import ContractViolation
from sage_rag.metrics import (
    CostReport,
    accuracy,
    bleu_n,
    cost,
    cost_efficiency,
    f1_match,
    option_label,
    relative_cost_efficiency,
    rouge_l,
)


def test_cost_examples():
    assert cost(1e6, 0, 10 / 1e6, 30 / 1e6) == pytest.approx(10.0)
    assert cost(0, 0, 10 / 1e6, 30 / 1e6) == 0
    assert cost(1e6, 1e6, 10 / 1e6, 30 / 1e6) == pytest.approx(40.0)
    with pytest.raises(ContractViolation):
        cost(-1, 0, 1, 1)


def test_cost_is_additive():
    rng = random.Random(0)
    for _ in range(100):
        i_t, o_t = rng.randint(0, 10**6), rng.randint(0, 10**6)
        a, b = rng.randint(0, i_t), rng.randint(0, o_t)
        whole = cost(i_t, o_t, 3, 7)
        assert whole == cost(a, b, 3, 7) + cost(i_t - a, o_t - b, 3, 7)


def test_efficiency():
    assert cost_efficiency(0.75, 1.5) == 0.5
    with pytest.raises(ContractViolation):
        cost_efficiency(0.5, 0.0)


def test_relative_efficiency_self_and_price_invariance():
    m = CostReport(1000, 200, 2e-6, 2e-6, 0.7)
    assert relative_cost_efficiency(m, m) == 1.0
    b = CostReport(3000, 100, 2e-6, 2e-6, 0.6)
    scaled_m = CostReport(1000, 200, 2e-3, 2e-3, 0.7)
    scaled_b = CostReport(3000, 100, 2e-3, 2e-3, 0.6)
    assert relative_cost_efficiency(m, b) == pytest.approx(relative_cost_efficiency(scaled_m, scaled_b), rel=1e-12)
    # shared price cancels: ratio of quality per token
    assert relative_cost_efficiency(m, b) == pytest.approx((0.7 / 1200) / (0.6 / 3100))


def test_accuracy():
    assert accuracy(["A", "b "], ["a", "B"]) == 1.0
    assert accuracy(["A", "B"], ["A", "C"]) == 0.5
    assert accuracy(["Option (a)"], ["A"]) == 1.0
    assert accuracy(["(C) Paris"], ["C"]) == 1.0
    assert accuracy(["Paris"], ["paris"]) == 1.0
    with pytest.raises(ContractViolation):
        accuracy(["A"], ["A", "B"])
    with pytest.raises(ContractViolation):
        accuracy([], [])


def test_option_label():
    assert option_label("Option (a)") == "a"
    assert option_label("B.") == "b"
    assert option_label("answer: d") == "d"
    assert option_label("Paris") is None


def test_f1_examples():
    assert f1_match("the cat sat", ["the cat sat"]) == 1.0
    assert f1_match("cat sat", ["the cat sat"]) == pytest.approx(0.8)
    assert f1_match("dog ran", ["the cat sat"]) == 0.0
    assert f1_match("", ["the cat"]) == 0.0
    assert f1_match("", ["", "x"]) == 1.0
    assert f1_match("Cat, sat!", ["zzz", "cat sat"]) == 1.0


def test_rouge_and_bleu_examples():
    assert rouge_l("a b c d", "a b c d") == 1.0
    assert rouge_l("a b c d", "a b x d") == pytest.approx(0.75)
    assert bleu_n("a b c d", "a b c d", 1) == 1.0
    assert bleu_n("a b c d e", "a b c d e", 4) == pytest.approx(1.0)
    assert bleu_n("a a a", "a b c", 1) == pytest.approx(1 / 3)
    # brevity penalty: 2 of 4 reference tokens
    assert bleu_n("a b", "a b c d", 1) == pytest.approx(2.718281828459045 ** (1 - 2))
    with pytest.raises(ContractViolation):
        bleu_n("a", "a", 5)


words = st.lists(st.sampled_from(["a", "b", "c", "d", "e"]), max_size=12).map(" ".join)


@given(words, words)
def test_quality_metrics_in_unit_interval(p, r):
    for v in (f1_match(p, [r]), rouge_l(p, r), bleu_n(p, r, 1), bleu_n(p, r, 4)):
        assert 0.0 <= v <= 1.0 + 1e-12
    assert f1_match(p, [r]) == pytest.approx(f1_match(r, [p]))


@given(words.filter(bool))
def test_identical_texts_score_one(t):
    assert f1_match(t, [t]) == 1.0
    assert rouge_l(t, t) == 1.0
    assert bleu_n(t, t, 1) == 1.0
