"""Mini-batch training of the pair scorer on a frozen embedder."""

import logging
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..embedder import EmbedderSpec, embed_batch
from ..errors import ContractViolation, TrainingDivergedError
from .model import SegmentationModel, init_model, loss_and_grads
from .pairs import FeatureSet, SentencePair, augment_features

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    learning_rate: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    hidden: tuple[int, ...] = (256, 64)
    features: FeatureSet = "full"
    optimizer: Literal["adam", "sgd"] = "adam"

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ContractViolation("epochs >= 0, batch_size >= 1 and learning_rate > 0 required")
        if self.optimizer not in ("adam", "sgd"):
            raise ContractViolation(f"unknown optimizer {self.optimizer!r}")


def pair_features(
    pairs: Sequence[SentencePair], embed: EmbedderSpec, features: FeatureSet = "full"
) -> tuple[np.ndarray, np.ndarray]:
    """Embed each distinct sentence once and build the feature matrix and label vector."""
    texts = sorted({p.s1 for p in pairs} | {p.s2 for p in pairs})
    vecs = dict(zip(texts, embed_batch(texts, embed)))
    X1 = np.stack([vecs[p.s1] for p in pairs])
    X2 = np.stack([vecs[p.s2] for p in pairs])
    y = np.array([p.label for p in pairs], dtype=np.float64)
    return augment_features(X1, X2, features), y


class _Adam:
    def __init__(self, params: list[np.ndarray], lr: float, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1 - self.b1**self.t
        c2 = 1 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def fit(model: SegmentationModel, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> SegmentationModel:
    """Train a copy of ``model`` on a precomputed feature matrix. Records per-epoch mean loss in ``history``."""
    if cfg.batch_size > len(y):
        raise ContractViolation(f"batch_size {cfg.batch_size} exceeds dataset size {len(y)}")
    model = model.copy()
    params = [*model.weights, *model.biases]
    adam = _Adam(params, cfg.learning_rate) if cfg.optimizer == "adam" else None
    rng = np.random.default_rng(cfg.seed)
    n_layers = len(model.weights)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(y))
        total, seen = 0.0, 0
        for start in range(0, len(y), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, gw, gb = loss_and_grads(model, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            total += loss * len(idx)
            seen += len(idx)
            grads = [*gw, *gb]
            if adam is not None:
                adam.step(params, grads)
            else:
                for p, g in zip(params, grads):
                    p -= cfg.learning_rate * g
        epoch_loss = total / seen
        if not np.isfinite(epoch_loss) or not all(np.all(np.isfinite(p)) for p in params):
            raise TrainingDivergedError(epoch, epoch_loss)
        model.history.append(epoch_loss)
        logger.info("epoch %d/%d loss %.6f", epoch, cfg.epochs, epoch_loss)
    assert len(model.weights) == n_layers
    return model


def train(pairs: Sequence[SentencePair], embed: EmbedderSpec, cfg: TrainConfig = TrainConfig()) -> SegmentationModel:
    if not pairs:
        raise ContractViolation("no training pairs")
    if len({p.label for p in pairs}) < 2:
        raise ContractViolation("training pairs must contain both labels")
    X, y = pair_features(pairs, embed, cfg.features)
    model = init_model(embed.dimension, cfg.hidden, cfg.seed, cfg.features)
    return fit(model, X, y, cfg)
