"""LLM cost accounting and QA quality metrics."""

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import ContractViolation
from .tokens import normalized_tokens


@dataclass(frozen=True)
class CostReport:
    input_tokens: int
    output_tokens: int
    price_in: float
    price_out: float
    quality: float

    @property
    def cost(self) -> float:
        return cost(self.input_tokens, self.output_tokens, self.price_in, self.price_out)

    @property
    def efficiency(self) -> float:
        return cost_efficiency(self.quality, self.cost)


def cost(input_tokens: float, output_tokens: float, price_in: float, price_out: float) -> float:
    """Money spent: input tokens times input price plus output tokens times output price."""
    if min(input_tokens, output_tokens, price_in, price_out) < 0:
        raise ContractViolation("token counts and prices must be non-negative")
    return input_tokens * price_in + output_tokens * price_out


def cost_efficiency(quality: float, spent: float) -> float:
    if spent <= 0:
        raise ContractViolation("cost efficiency is undefined for zero cost")
    return quality / spent


def relative_cost_efficiency(method: CostReport, baseline: CostReport) -> float:
    return method.efficiency / baseline.efficiency


# answer canonicalisation

_LABEL_RE = re.compile(r"^(?:(?:option|answer|choice)\s*[:\-]?\s*)?\(?([a-z])\)?(?:[.:)\s]|$)")


def option_label(text: str) -> str | None:
    """``"Option (a)"``, ``"B."``, ``"(c) Paris"`` -> ``"a"``, ``"b"``, ``"c"``; None if no label."""
    m = _LABEL_RE.match(text.strip().casefold())
    return m.group(1) if m else None


def _canonical(text: str) -> str:
    return " ".join(text.split()).casefold()


def accuracy(predictions: Sequence[str], golds: Sequence[str]) -> float:
    """Exact-match fraction after trimming and case-folding.

    When the gold answer is a bare option label, the prediction is reduced to
    its leading option label before comparing.
    """
    if len(predictions) != len(golds):
        raise ContractViolation("predictions and golds differ in length")
    if not golds:
        raise ContractViolation("accuracy of an empty set is undefined")
    hits = 0
    for pred, gold in zip(predictions, golds):
        g = _canonical(gold)
        if len(g) == 1 and g.isalpha():
            hits += option_label(pred) == g
        else:
            hits += _canonical(pred) == g
    return hits / len(golds)


def _f1(pred: list[str], gold: list[str]) -> float:
    if not pred or not gold:
        return float(pred == gold)
    common = sum((Counter(pred) & Counter(gold)).values())
    if common == 0:
        return 0.0
    p = common / len(pred)
    r = common / len(gold)
    return 2 * p * r / (p + r)


def f1_match(prediction: str, golds: Sequence[str]) -> float:
    """Best token-overlap F1 of ``prediction`` against any gold reference."""
    if not golds:
        raise ContractViolation("f1_match needs at least one reference")
    pred = normalized_tokens(prediction)
    return max(_f1(pred, normalized_tokens(g)) for g in golds)


def _lcs(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(prediction: str, reference: str) -> float:
    """LCS-based F-measure with beta = 1."""
    pred, ref = normalized_tokens(prediction), normalized_tokens(reference)
    if not pred or not ref:
        return float(pred == ref)
    lcs = _lcs(pred, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(pred), lcs / len(ref)
    return 2 * p * r / (p + r)


def _ngrams(tokens: list[str], k: int) -> Counter:
    return Counter(tuple(tokens[i : i + k]) for i in range(len(tokens) - k + 1))


def bleu_n(prediction: str, reference: str, n: int = 4) -> float:
    """Sentence BLEU: geometric mean of clipped k-gram precisions for k <= n, times brevity penalty."""
    if not 1 <= n <= 4:
        raise ContractViolation("BLEU order must be in 1..4")
    pred, ref = normalized_tokens(prediction), normalized_tokens(reference)
    if not pred:
        return float(not ref)
    log_sum = 0.0
    for k in range(1, n + 1):
        cand = _ngrams(pred, k)
        total = sum(cand.values())
        clipped = sum((cand & _ngrams(ref, k)).values())
        if total == 0 or clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    bp = 1.0 if len(pred) > len(ref) else math.exp(1 - len(ref) / len(pred))
    return bp * math.exp(log_sum / n)
