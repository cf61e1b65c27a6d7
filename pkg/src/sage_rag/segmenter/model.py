"""The sentence-pair scorer: a small ReLU MLP with a sigmoid output, in NumPy."""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractViolation, CorruptModelError, ModelFormatError
from .pairs import FeatureSet, feature_width

FORMAT_NAME = "sage-segmentation-model"
FORMAT_VERSION = 1
SCORE_EPS = 1e-12


@dataclass
class SegmentationModel:
    d: int
    layer_dims: list[int]
    weights: list[np.ndarray]  # layer i: (layer_dims[i], layer_dims[i+1])
    biases: list[np.ndarray]
    activations: list[str]  # "relu" for hidden layers, "sigmoid" last
    features: FeatureSet = "full"
    history: list[float] = field(default_factory=list, compare=False, repr=False)

    def check(self) -> None:
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise CorruptModelError(f"non-finite parameter in layer {i}")

    def copy(self) -> "SegmentationModel":
        return SegmentationModel(
            self.d,
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
            self.features,
        )


def init_model(
    d: int, hidden: tuple[int, ...] = (256, 64), seed: int = 0, features: FeatureSet = "full"
) -> SegmentationModel:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for every layer."""
    dims = [feature_width(d, features), *hidden, 1]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    acts = ["relu"] * len(hidden) + ["sigmoid"]
    return SegmentationModel(d, dims, weights, biases, acts, features)


def sigmoid(z):
    # Split by sign so exp never overflows.
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    raise CorruptModelError(f"unknown activation {kind!r}")


def forward_batch(model: SegmentationModel, features: np.ndarray) -> np.ndarray:
    """Scores for each row of ``features``.

    Uses einsum rather than BLAS so each row's result is bit-identical no
    matter how many rows are scored together.
    """
    model.check()
    h = np.asarray(features, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != model.layer_dims[0]:
        raise ContractViolation(f"expected features of width {model.layer_dims[0]}, got shape {h.shape}")
    for w, b, act in zip(model.weights, model.biases, model.activations):
        h = _activate(np.einsum("ij,jk->ik", h, w) + b, act)
    return np.clip(h[:, 0], SCORE_EPS, 1.0 - SCORE_EPS)


def forward(model: SegmentationModel, features) -> float:
    return float(forward_batch(model, np.asarray(features, dtype=np.float64)[None, :])[0])


def loss_and_grads(
    model: SegmentationModel, X: np.ndarray, y: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean squared error over the batch and its gradients w.r.t. every weight and bias."""
    acts = [X]
    pre = []
    h = X
    for w, b, act in zip(model.weights, model.biases, model.activations):
        z = h @ w + b
        pre.append(z)
        h = _activate(z, act)
        acts.append(h)
    p = h[:, 0]
    n = X.shape[0]
    diff = p - y
    loss = float(np.mean(diff * diff))

    grad = (2.0 / n) * diff[:, None]
    gw: list[np.ndarray] = [None] * len(model.weights)
    gb: list[np.ndarray] = [None] * len(model.biases)
    for i in reversed(range(len(model.weights))):
        if model.activations[i] == "sigmoid":
            grad = grad * acts[i + 1] * (1.0 - acts[i + 1])
        else:
            grad = grad * (pre[i] > 0)
        gw[i] = acts[i].T @ grad
        gb[i] = grad.sum(axis=0)
        if i:
            grad = grad @ model.weights[i].T
    return loss, gw, gb


def _serialize(model: SegmentationModel) -> bytes:
    header = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "d": model.d,
        "layer_dims": model.layer_dims,
        "activations": model.activations,
        "features": model.features,
    }
    lines = [json.dumps(header, sort_keys=True)]
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        rec = {"layer": i, "shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()}
        lines.append(json.dumps(rec))
    return ("\n".join(lines) + "\n").encode("utf-8")


def model_fingerprint(model: SegmentationModel) -> str:
    return hashlib.sha256(_serialize(model)).hexdigest()


def save_model(model: SegmentationModel, path) -> None:
    Path(path).write_bytes(_serialize(model))


def load_model(path) -> SegmentationModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ModelFormatError(f"{path}: empty model file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: bad header: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise ModelFormatError(f"{path}: not a segmentation model file")
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format_version {header.get('format_version')} (expected {FORMAT_VERSION})"
        )
    dims = header["layer_dims"]
    weights, biases = [], []
    for i, line in enumerate(lines[1:]):
        rec = json.loads(line)
        shape = tuple(rec["shape"])
        if rec["layer"] != i or shape != (dims[i], dims[i + 1]):
            raise ModelFormatError(f"{path}: layer {i} has unexpected shape {shape}")
        weights.append(np.asarray(rec["weights"], dtype=np.float64).reshape(shape))
        biases.append(np.asarray(rec["bias"], dtype=np.float64))
    if len(weights) != len(dims) - 1:
        raise ModelFormatError(f"{path}: expected {len(dims) - 1} layers, found {len(weights)}")
    model = SegmentationModel(header["d"], dims, weights, biases, header["activations"], header["features"])
    model.check()
    return model
