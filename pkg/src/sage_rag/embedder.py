"""Text embedders.

Two interchangeable backends sit behind :func:`embed_text` / :func:`embed_batch`:

* ``reference-hash``: signed feature hashing of character 3-grams with
  term-frequency weights, L2-normalised. Pure, deterministic and offline.
* ``remote-service``: an HTTP embedding endpoint (``{model, input}`` in,
  ``{data: [{index, embedding}]}`` out). Returned vectors are re-normalised.
"""

import functools
import hashlib
import re
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ._http import JsonService
from .errors import ContractViolation, RetryableError

NGRAM = 3
DEFAULT_DIM = 256
EMBED_KEY_ENV = "SAGE_EMBED_API_KEY"

_WS_RE = re.compile(r"\s+")


class EmptyTextWarning(UserWarning):
    """Emitted when a text has no features and maps to the zero vector."""


@dataclass(frozen=True)
class EmbedderSpec:
    kind: Literal["reference-hash", "remote-service"] = "reference-hash"
    dimension: int = DEFAULT_DIM
    endpoint: str | None = None
    model: str | None = None
    max_in_flight: int = 4
    batch_size: int = 512
    max_attempts: int = 3

    def __post_init__(self):
        if self.kind not in ("reference-hash", "remote-service"):
            raise ContractViolation(f"unknown embedder kind {self.kind!r}")
        if self.dimension < 8:
            raise ContractViolation("embedding dimension must be >= 8")
        if self.kind == "remote-service" and not self.endpoint:
            raise ContractViolation("remote-service embedder needs an endpoint")

    def fingerprint(self) -> str:
        return f"{self.kind}:{self.dimension}:{self.model or ''}"


@functools.lru_cache(maxsize=1 << 18)
def _gram_hash(gram: str) -> int:
    return int.from_bytes(hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "little")


def _features(text: str) -> Counter:
    norm = _WS_RE.sub(" ", text.casefold()).strip()
    if not norm:
        return Counter()
    padded = f" {norm} "
    return Counter(padded[i : i + NGRAM] for i in range(len(padded) - NGRAM + 1))


def hash_embed(text: str, dimension: int = DEFAULT_DIM) -> np.ndarray:
    vec = np.zeros(dimension, dtype=np.float64)
    feats = _features(text)
    if not feats:
        warnings.warn("text has no features; returning the zero vector", EmptyTextWarning, stacklevel=3)
        return vec
    for gram, count in feats.items():
        h = _gram_hash(gram)
        sign = -1.0 if (h >> 63) & 1 else 1.0
        vec[h % dimension] += sign * count
    norm = np.sqrt(np.dot(vec, vec))
    if norm > 0:
        vec /= norm
    return vec


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


class HashEmbedder:
    def __init__(self, spec: EmbedderSpec):
        self.spec = spec

    def embed(self, text: str) -> np.ndarray:
        return hash_embed(text, self.spec.dimension)

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


class RemoteEmbedder:
    def __init__(self, spec: EmbedderSpec, transport=None, backoff: float = 0.5):
        self.spec = spec
        self.service = JsonService(
            spec.endpoint,
            EMBED_KEY_ENV,
            max_attempts=spec.max_attempts,
            max_in_flight=spec.max_in_flight,
            backoff=backoff,
            transport=transport,
        )

    def _request(self, texts: Sequence[str]) -> list[np.ndarray]:
        body = self.service.post({"model": self.spec.model or "", "input": list(texts)})
        try:
            rows = sorted(body["data"], key=lambda r: r["index"])
            out = [np.asarray(r["embedding"], dtype=np.float64) for r in rows]
        except (KeyError, TypeError) as exc:
            raise RetryableError(f"malformed embedding response: {exc}", self.spec.endpoint) from exc
        if len(out) != len(texts):
            raise RetryableError("embedding count does not match input count", self.spec.endpoint)
        for v in out:
            if v.shape != (self.spec.dimension,) or not np.all(np.isfinite(v)):
                raise RetryableError("embedding has wrong dimension or non-finite values", self.spec.endpoint)
        return [_normalize(v) for v in out]

    def embed(self, text: str) -> np.ndarray:
        return self._request([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        size = self.spec.batch_size
        starts = list(range(0, len(texts), size))
        with ThreadPoolExecutor(max_workers=self.spec.max_in_flight) as pool:
            futures = [pool.submit(self._request, texts[s : s + size]) for s in starts]
            out: list[np.ndarray] = []
            for start, fut in zip(starts, futures):
                try:
                    out.extend(fut.result())
                except RetryableError as exc:
                    exc.index = start
                    raise
        return out


_remote_cache: dict[EmbedderSpec, RemoteEmbedder] = {}


def get_embedder(spec: EmbedderSpec):
    if spec.kind == "reference-hash":
        return HashEmbedder(spec)
    if spec not in _remote_cache:
        _remote_cache[spec] = RemoteEmbedder(spec)
    return _remote_cache[spec]


def _check_text(text, index: int | None = None) -> None:
    if not isinstance(text, str):
        where = f"texts[{index}]: " if index is not None else ""
        err = ContractViolation(f"{where}expected str, got {type(text).__name__}")
        err.index = index
        raise err


def embed_text(text: str, spec: EmbedderSpec = EmbedderSpec()) -> np.ndarray:
    _check_text(text)
    return get_embedder(spec).embed(text)


def embed_batch(texts: Sequence[str], spec: EmbedderSpec = EmbedderSpec()) -> list[np.ndarray]:
    if len(texts) == 0:
        raise ContractViolation("embed_batch needs a nonempty sequence")
    for i, t in enumerate(texts):
        _check_text(t, i)
    return get_embedder(spec).embed_batch(texts)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between ``a`` and ``b``; 0.0 when either is the zero vector."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.sqrt(np.dot(a, a))
    nb = np.sqrt(np.dot(b, b))
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
