from .model import (
    SegmentationModel,
    forward,
    forward_batch,
    init_model,
    load_model,
    loss_and_grads,
    model_fingerprint,
    save_model,
)
from .pairs import SentencePair, augment_features, collect_pairs
from .segment import Chunk, score_pair, score_pairs, segment_corpus
from .sentences import CoarseChunk, segment_coarse, sentence_spans, split_sentences
from .train import TrainConfig, fit, pair_features, train

__all__ = [
    "Chunk",
    "CoarseChunk",
    "SegmentationModel",
    "SentencePair",
    "TrainConfig",
    "augment_features",
    "collect_pairs",
    "fit",
    "forward",
    "forward_batch",
    "init_model",
    "load_model",
    "loss_and_grads",
    "model_fingerprint",
    "pair_features",
    "save_model",
    "score_pair",
    "score_pairs",
    "segment_coarse",
    "segment_corpus",
    "sentence_spans",
    "split_sentences",
    "train",
]
