"""Reranking and gradient-based dynamic chunk selection.

After reranking, candidates are walked in descending score order. The first
``min_k`` are always kept; after that a chunk is kept only while its score is
at least ``g`` times the score of the chunk just before it. The first sharp
drop ends the selection, so the number of chunks returned adapts to how
quickly relevance falls off.
"""

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ._http import JsonService
from .embedder import EmbedderSpec, cosine_similarity, embed_batch, embed_text
from .errors import ContractViolation, EmptyCandidatesError, RetryableError
from .segmenter.segment import Chunk

RERANK_KEY_ENV = "SAGE_RERANK_API_KEY"
_TINY = np.nextafter(0.0, 1.0)
_BELOW_ONE = np.nextafter(1.0, 0.0)

CutReason = Literal["gradient-stop", "exhausted-candidates", "min_k-floor"]


@dataclass(frozen=True)
class ScoredChunk:
    chunk_id: int
    raw_score: float
    normalized_score: float


@dataclass(frozen=True)
class SelectionResult:
    selected: list[ScoredChunk]
    k_selected: int
    cut_reason: CutReason


@dataclass(frozen=True)
class RerankerSpec:
    """``reference`` scores by embedding cosine; ``remote`` calls a cross-encoder endpoint.

    ``scale`` multiplies reference cosines before normalisation. Cosines sit in
    [-1, 1], so with scale 1 the logistic squeezes them into [0.27, 0.73] and a
    ratio test at g=0.3 can never fire; raise ``scale`` to sharpen drops.
    """

    kind: Literal["reference", "remote"] = "reference"
    scale: float = 1.0
    endpoint: str | None = None
    max_attempts: int = 3


def normalize_scores(raw: Sequence[float]) -> list[float]:
    """Elementwise logistic, strictly increasing and mapping into (0, 1)."""
    x = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ContractViolation("scores must be finite")
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    # Saturated values would break the ratio test at 0 and the open interval at 1.
    return np.clip(out, _TINY, _BELOW_ONE).tolist()


_remote_rerankers: dict[str, JsonService] = {}


def _remote_scores(question: str, texts: list[str], spec: RerankerSpec) -> list[float]:
    if spec.endpoint not in _remote_rerankers:
        _remote_rerankers[spec.endpoint] = JsonService(spec.endpoint, RERANK_KEY_ENV, max_attempts=spec.max_attempts)
    body = _remote_rerankers[spec.endpoint].post({"query": question, "passages": texts})
    scores = body.get("scores") if isinstance(body, dict) else None
    if not isinstance(scores, list) or len(scores) != len(texts):
        raise RetryableError("reranker returned a malformed score list", spec.endpoint)
    return [float(s) for s in scores]


def rerank(
    question: str,
    candidates: Sequence[Chunk],
    scorer: RerankerSpec = RerankerSpec(),
    embed: EmbedderSpec = EmbedderSpec(),
) -> list[ScoredChunk]:
    if not candidates:
        raise EmptyCandidatesError("nothing to rerank")
    texts = [c.text for c in candidates]
    if scorer.kind == "remote":
        raw = _remote_scores(question, texts, scorer)
    else:
        q = embed_text(question, embed)
        raw = [scorer.scale * cosine_similarity(q, v) for v in embed_batch(texts, embed)]
    norm = normalize_scores(raw)
    scored = [ScoredChunk(c.id, float(r), float(n)) for c, r, n in zip(candidates, raw, norm)]
    scored.sort(key=lambda s: (-s.normalized_score, -s.raw_score, s.chunk_id))
    return scored


def select_gradient(ranked: Sequence[ScoredChunk], min_k: int = 7, g: float = 0.3) -> SelectionResult:
    if not ranked:
        raise EmptyCandidatesError("no candidates to select from")
    if min_k < 1:
        raise ContractViolation("min_k must be >= 1")
    if not 0.0 < g <= 1.0:
        raise ContractViolation("g must lie in (0, 1]")
    scores = [c.normalized_score for c in ranked]
    if any(b > a for a, b in zip(scores, scores[1:])):
        raise ContractViolation("candidates must be sorted by non-increasing normalized score")

    k = min(min_k, len(ranked))
    if k == len(ranked):
        return SelectionResult(list(ranked), k, "min_k-floor")
    reason: CutReason = "exhausted-candidates"
    for i in range(k, len(ranked)):
        if scores[i] >= g * scores[i - 1]:
            k += 1
        else:
            reason = "gradient-stop"
            break
    return SelectionResult(list(ranked[:k]), k, reason)
