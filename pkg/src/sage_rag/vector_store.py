"""Exact in-memory cosine index over chunk embeddings, with on-disk persistence.

Layout of a persisted index directory::

    chunks.jsonl   one chunk record per line, insertion order
    vectors.bin    header (magic, format_version, d, count), int64 ids,
                   float64 vectors row-major, sha256 of everything before it
    meta.json      embedder spec, dimension, model fingerprint, config snapshot
"""

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ContractViolation, DuplicateIdError, EmptyIndexError, IndexFormatError
from .segmenter.segment import Chunk

MAGIC = b"SAGEVEC\0"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIQ")


@dataclass(frozen=True)
class QueryHit:
    chunk_id: int
    similarity: float


class VectorStore:
    def __init__(self, dimension: int, meta: dict[str, Any] | None = None):
        if dimension < 1:
            raise ContractViolation("dimension must be positive")
        self.dimension = dimension
        self.meta: dict[str, Any] = dict(meta or {})
        self._chunks: dict[int, Chunk] = {}
        self._ids: list[int] = []
        self._rows: list[np.ndarray] = []
        self._matrix: np.ndarray | None = None
        self._id_array: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._ids)

    def insert(self, chunk: Chunk, vector) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dimension,):
            raise ContractViolation(f"vector shape {vec.shape} does not match index dimension {self.dimension}")
        if chunk.id in self._chunks:
            raise DuplicateIdError(f"chunk id {chunk.id} already indexed")
        self._chunks[chunk.id] = chunk
        self._ids.append(chunk.id)
        self._rows.append(vec.copy())
        self._matrix = None

    def get(self, chunk_id: int) -> tuple[Chunk, np.ndarray]:
        chunk = self._chunks[chunk_id]
        return chunk, self._rows[self._ids.index(chunk_id)]

    def chunk(self, chunk_id: int) -> Chunk:
        return self._chunks[chunk_id]

    def chunks(self) -> list[Chunk]:
        return [self._chunks[i] for i in self._ids]

    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._matrix is None:
            self._matrix = np.stack(self._rows) if self._rows else np.zeros((0, self.dimension))
            self._id_array = np.asarray(self._ids, dtype=np.int64)
        return self._matrix, self._id_array

    def query_top_n(self, q, n: int) -> list[QueryHit]:
        """Top ``n`` chunks by dot product with ``q``, ties broken by ascending chunk id."""
        if not self._ids:
            raise EmptyIndexError("index is empty")
        if n < 1:
            raise ContractViolation("N must be positive")
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.dimension,):
            raise ContractViolation(f"query shape {q.shape} does not match index dimension {self.dimension}")
        matrix, ids = self._arrays()
        sims = matrix @ q
        order = np.lexsort((ids, -sims))[:n]
        return [QueryHit(int(ids[i]), float(sims[i])) for i in order]

    # persistence

    def _vector_bytes(self) -> bytes:
        matrix, ids = self._arrays()
        body = _HEADER.pack(MAGIC, FORMAT_VERSION, self.dimension, len(ids))
        body += ids.astype("<i8").tobytes() + matrix.astype("<f8").tobytes()
        return body + hashlib.sha256(body).digest()

    def save(self, path) -> None:
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        with open(root / "chunks.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for chunk in self.chunks():
                fh.write(json.dumps(chunk.to_record(), ensure_ascii=False, sort_keys=True) + "\n")
        (root / "vectors.bin").write_bytes(self._vector_bytes())
        meta = dict(self.meta, format_version=FORMAT_VERSION, dimension=self.dimension, count=len(self))
        (root / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "VectorStore":
        root = Path(path)
        try:
            meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
            raw = (root / "vectors.bin").read_bytes()
            lines = (root / "chunks.jsonl").read_text(encoding="utf-8").splitlines()
        except FileNotFoundError as exc:
            raise IndexFormatError(f"incomplete index at {root}: {exc.filename} missing") from exc
        if meta.get("format_version") != FORMAT_VERSION:
            raise IndexFormatError(
                f"meta.json format_version {meta.get('format_version')!r} unsupported (expected {FORMAT_VERSION})"
            )
        if len(raw) < _HEADER.size + 32:
            raise IndexFormatError("vectors.bin is truncated")
        body, digest = raw[:-32], raw[-32:]
        magic, version, d, count = _HEADER.unpack_from(body)
        if magic != MAGIC:
            raise IndexFormatError("vectors.bin has a bad magic number")
        if version != FORMAT_VERSION:
            raise IndexFormatError(f"vectors.bin format_version {version} unsupported (expected {FORMAT_VERSION})")
        if hashlib.sha256(body).digest() != digest:
            raise IndexFormatError("vectors.bin checksum mismatch")
        if len(body) != _HEADER.size + count * 8 * (1 + d):
            raise IndexFormatError("vectors.bin size does not match its header")
        ids = np.frombuffer(body, dtype="<i8", count=count, offset=_HEADER.size)
        matrix = np.frombuffer(body, dtype="<f8", count=count * d, offset=_HEADER.size + 8 * count).reshape(count, d)
        chunks = {c.id: c for c in (Chunk.from_record(json.loads(line)) for line in lines if line)}
        if len(chunks) != count or set(chunks) != set(int(i) for i in ids):
            raise IndexFormatError("chunks.jsonl does not match vectors.bin")

        meta = {k: v for k, v in meta.items() if k not in ("format_version", "dimension", "count")}
        store = cls(int(d), meta)
        for cid, row in zip(ids, matrix):
            store.insert(chunks[int(cid)], row)
        return store
