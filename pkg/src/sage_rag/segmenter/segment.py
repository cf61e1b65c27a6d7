"""Pair scoring and two-stage (coarse, then model-driven) corpus segmentation."""

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..embedder import EmbedderSpec, embed_batch
from ..errors import ContractViolation
from ..tokens import count_tokens
from .model import SegmentationModel, forward_batch
from .pairs import augment_features
from .sentences import pack_greedy, sentence_spans

INFERENCE_BATCH = 512


@dataclass(frozen=True)
class Chunk:
    id: int
    doc_id: str
    text: str
    token_count: int
    span: tuple[int, int, int]  # (paragraph index, first sentence, end sentence exclusive)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["span"] = list(self.span)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Chunk":
        return cls(int(rec["id"]), rec["doc_id"], rec["text"], int(rec["token_count"]), tuple(rec["span"]))


def _check_dims(model: SegmentationModel, embed: EmbedderSpec) -> None:
    if model.d != embed.dimension:
        raise ContractViolation(f"model expects d={model.d}, embedder produces d={embed.dimension}")


def score_pairs(
    model: SegmentationModel,
    pairs: Sequence[tuple[str, str]],
    embed: EmbedderSpec,
    batch_size: int = INFERENCE_BATCH,
) -> np.ndarray:
    """Score many sentence pairs, embedding each distinct sentence once and running the model in batches."""
    _check_dims(model, embed)
    if not pairs:
        return np.zeros(0)
    texts = sorted({s for pair in pairs for s in pair})
    vecs = dict(zip(texts, embed_batch(texts, embed)))
    scores = np.empty(len(pairs))
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start : start + batch_size]
        X1 = np.stack([vecs[a] for a, _ in chunk])
        X2 = np.stack([vecs[b] for _, b in chunk])
        scores[start : start + len(chunk)] = forward_batch(model, augment_features(X1, X2, model.features))
    return scores


def score_pair(model: SegmentationModel, s1: str, s2: str, embed: EmbedderSpec) -> float:
    return float(score_pairs(model, [(s1, s2)], embed)[0])


def paragraphs_of(text: str) -> list[str]:
    return [p for p in text.split("\n") if p.strip()]


def segment_corpus(
    corpus: str,
    model: SegmentationModel,
    embed: EmbedderSpec,
    ss: float = 0.55,
    l: int = 400,
    doc_id: str = "doc",
    start_id: int = 0,
    batch_size: int = INFERENCE_BATCH,
) -> list[Chunk]:
    """Split one document into fine chunks.

    Paragraphs (newline-separated) are packed into coarse chunks of about
    ``l`` tokens; inside each coarse chunk a new fine chunk starts wherever
    the model scores an adjacent sentence pair below ``ss``.
    """
    if not 0.0 <= ss <= 1.0:
        raise ContractViolation("ss must lie in [0, 1]")
    if l < 16:
        raise ContractViolation("coarse chunk length l must be >= 16")
    _check_dims(model, embed)

    # (paragraph text, sentence spans, coarse groups) per paragraph
    layout = []
    pairs: list[tuple[str, str]] = []
    for para in paragraphs_of(corpus):
        spans = sentence_spans(para)
        sents = [para[s:e] for s, e in spans]
        groups = pack_greedy([count_tokens(s) for s in sents], l)
        layout.append((para, spans, groups))
        for a, b in groups:
            pairs.extend((sents[i], sents[i + 1]) for i in range(a, b - 1))

    scores = iter(score_pairs(model, pairs, embed, batch_size))
    chunks: list[Chunk] = []
    next_id = start_id
    for p_idx, (para, spans, groups) in enumerate(layout):
        for a, b in groups:
            cuts = [a]
            for i in range(a, b - 1):
                if next(scores) < ss:
                    cuts.append(i + 1)
            cuts.append(b)
            for s, e in zip(cuts[:-1], cuts[1:]):
                text = para[spans[s][0] : spans[e - 1][1]]
                chunks.append(Chunk(next_id, doc_id, text, count_tokens(text), (p_idx, s, e)))
                next_id += 1
    return chunks
