"""HTTP front end over a loaded index.

Queries are read-only on the index. When the configured LLM client must be
called in order (scripted mocks), requests are serialised with a lock.
"""

import contextlib
import threading

from fastapi import FastAPI, HTTPException

from ..errors import ContractViolation, RetryableError, SageError, StageError, UpstreamError
from ..pipeline import Pipeline, evaluate
from ..segmenter import SegmentationModel, segment_corpus
from .schemas import (
    ChunkOut,
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    QueryRequest,
    QueryResponse,
    SegmentRequest,
    SegmentResponse,
)


def _status_for(exc: SageError) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, (RetryableError, UpstreamError)):
        return 502
    if isinstance(cause, ContractViolation):
        return 422
    return 500


def create_app(pipeline: Pipeline, seg_model: SegmentationModel | None = None) -> FastAPI:
    app = FastAPI(title="sage-rag", version="0.1.0")
    needs_lock = pipeline.llm.sequential or pipeline.feedback_llm.sequential
    lock = threading.Lock() if needs_lock else contextlib.nullcontext()

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            chunks=len(pipeline.store),
            dimension=pipeline.store.dimension,
            config_fingerprint=pipeline.config.fingerprint(),
            segmentation_model=pipeline.store.meta.get("segmentation_model"),
        )

    @app.post("/query", response_model=QueryResponse)
    def query(req: QueryRequest):
        try:
            with lock:
                answer, trace = pipeline.answer_with_feedback(req.question, req.qtype, req.options)
        except SageError as exc:
            raise HTTPException(_status_for(exc), str(exc)) from exc
        return QueryResponse(answer=answer, termination=trace.termination, rounds=trace.total_rounds,
                             trace=trace.to_record())

    @app.post("/segment", response_model=SegmentResponse)
    def segment(req: SegmentRequest):
        if seg_model is None:
            raise HTTPException(503, "no segmentation model loaded")
        cfg = pipeline.config
        try:
            chunks = segment_corpus(
                req.text, seg_model, cfg.embedder,
                cfg.ss if req.ss is None else req.ss,
                cfg.l if req.l is None else req.l,
                req.doc_id,
            )
        except SageError as exc:
            raise HTTPException(_status_for(exc), str(exc)) from exc
        return SegmentResponse(chunks=[ChunkOut(**c.to_record()) for c in chunks])

    @app.post("/evaluate", response_model=EvaluateResponse)
    def run_eval(req: EvaluateRequest):
        try:
            with lock:
                report = evaluate(pipeline, req.records)
        except SageError as exc:
            raise HTTPException(_status_for(exc), str(exc)) from exc
        return EvaluateResponse(
            summary=report.summary,
            results=report.records()[: len(report.results)],
            input_tokens=report.input_tokens,
            output_tokens=report.output_tokens,
        )

    return app
