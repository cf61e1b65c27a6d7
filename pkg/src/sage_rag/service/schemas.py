from typing import Literal

from pydantic import BaseModel, Field

from ..pipeline import QaRecord


class HealthResponse(BaseModel):
    status: str
    chunks: int
    dimension: int
    config_fingerprint: str
    segmentation_model: str | None


class QueryRequest(BaseModel):
    question: str = Field(min_length=1)
    qtype: Literal["multiple-choice", "open-ended"] = "open-ended"
    options: list[str] | None = None


class QueryResponse(BaseModel):
    answer: str
    termination: str
    rounds: int
    trace: dict


class SegmentRequest(BaseModel):
    text: str
    doc_id: str = "doc"
    ss: float | None = Field(None, ge=0, le=1)
    l: int | None = Field(None, ge=16)


class ChunkOut(BaseModel):
    id: int
    doc_id: str
    text: str
    token_count: int
    span: tuple[int, int, int]


class SegmentResponse(BaseModel):
    chunks: list[ChunkOut]


class EvaluateRequest(BaseModel):
    records: list[QaRecord]


class EvaluateResponse(BaseModel):
    summary: list[dict]
    results: list[dict]
    input_tokens: int
    output_tokens: int
