"""Pipeline configuration.

Defaults follow the published hyper-parameters: ss=0.55, l=400, min_k=7,
g=0.3, fs=9, and at most three feedback rounds. ``top_n`` (candidates fetched
before reranking) is not published; 20 is our choice.
"""

import hashlib
import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .embedder import EmbedderSpec
from .errors import ContractViolation
from .llm import LlmSpec
from .selection import RerankerSpec


class PipelineConfig(BaseModel):
    ss: float = Field(0.55, gt=0, lt=1)
    l: int = Field(400, ge=16)
    min_k: int = Field(7, ge=1)
    g: float = Field(0.3, gt=0, le=1)
    fs: int = Field(9, ge=1, le=10)
    top_n: int = Field(20, ge=1, alias="N")
    max_feedback_rounds: int = Field(3, ge=1)
    embedder: EmbedderSpec = EmbedderSpec()
    reranker: RerankerSpec = RerankerSpec()
    llm: LlmSpec = LlmSpec()
    price_in: float = Field(0.0, ge=0)
    price_out: float = Field(0.0, ge=0)
    concurrency: int = Field(1, ge=1)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _min_k_within_n(self):
        if self.min_k > self.top_n:
            raise ValueError("min_k must not exceed N")
        return self

    def snapshot(self) -> dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)

    def fingerprint(self) -> str:
        blob = json.dumps(self.snapshot(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_overrides(self, **overrides) -> "PipelineConfig":
        data = self.snapshot()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return make_config(data)


def make_config(data: dict[str, Any] | None = None) -> PipelineConfig:
    try:
        return PipelineConfig.model_validate(data or {})
    except (ValidationError, ContractViolation) as exc:
        raise ContractViolation(f"invalid configuration: {exc}") from exc


def load_config(path) -> PipelineConfig:
    """Read a JSON config document. Unknown keys are rejected."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ContractViolation(f"cannot read config {path}: {exc}") from exc
    return make_config(data)
