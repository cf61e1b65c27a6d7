"""Training-pair harvesting and pair feature construction."""

import random
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..errors import ContractViolation, InsufficientDataError
from .sentences import split_sentences

FeatureSet = Literal["full", "pair"]


@dataclass(frozen=True)
class SentencePair:
    s1: str
    s2: str
    label: int


def collect_pairs(
    paragraphs: Sequence[str], negatives_per_positive: float = 1.0, seed: int = 0
) -> list[SentencePair]:
    """Harvest labelled sentence pairs from a paragraph-segmented corpus.

    Every pair of consecutive sentences inside one paragraph is a positive.
    Negatives are drawn, in order of preference, from

    1. boundaries between neighbouring paragraphs (last of i, first of i+1),
    2. other (last of i, first of j) combinations with j != i,
    3. random sentence pairs from two different paragraphs,

    until ``round(ratio * positives)`` have been collected.
    """
    if negatives_per_positive < 0:
        raise ContractViolation("negatives_per_positive must be >= 0")
    sents = [split_sentences(p) for p in paragraphs]
    sents = [s for s in sents if s]
    if len(sents) < 2 and negatives_per_positive > 0:
        raise InsufficientDataError("need at least 2 non-empty paragraphs to sample negatives")
    if not sents:
        raise InsufficientDataError("corpus has no sentences")

    rng = random.Random(seed)
    positives = [SentencePair(p[i], p[i + 1], 1) for p in sents for i in range(len(p) - 1)]
    wanted = round(negatives_per_positive * len(positives))

    negatives: list[SentencePair] = []
    seen: set[tuple[int, int, int, int]] = set()

    def take(candidates: list[tuple[int, int, int, int]]) -> None:
        rng.shuffle(candidates)
        for key in candidates:
            if len(negatives) >= wanted:
                return
            if key not in seen:
                seen.add(key)
                i, a, j, b = key
                negatives.append(SentencePair(sents[i][a], sents[j][b], 0))

    n = len(sents)
    if wanted:
        take([(i, len(sents[i]) - 1, i + 1, 0) for i in range(n - 1)])
    if len(negatives) < wanted:
        take([(i, len(sents[i]) - 1, j, 0) for i in range(n) for j in range(n) if j != i and j != i + 1])
    total = sum(len(p) for p in sents)
    attempts = 0
    while len(negatives) < wanted and attempts < 20 * wanted + 100 and len(seen) < total * total:
        attempts += 1
        i, j = rng.sample(range(n), 2)
        take([(i, rng.randrange(len(sents[i])), j, rng.randrange(len(sents[j])))])

    pairs = positives + negatives
    rng.shuffle(pairs)
    return pairs


def feature_width(d: int, features: FeatureSet = "full") -> int:
    return (4 if features == "full" else 2) * d


def augment_features(x1, x2, features: FeatureSet = "full") -> np.ndarray:
    """``[x1; x2; x1 - x2; x1 * x2]`` (or just ``[x1; x2]`` for the ablation). Works row-wise on 2-D input."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ContractViolation(f"dimension mismatch: {x1.shape} vs {x2.shape}")
    blocks = [x1, x2] if features == "pair" else [x1, x2, x1 - x2, x1 * x2]
    return np.concatenate(blocks, axis=-1)
