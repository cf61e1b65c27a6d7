"""Index building, question answering with self-feedback, and dataset evaluation."""

import json
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Literal, Sequence

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from . import metrics
from .config import PipelineConfig
from .embedder import EmbedderSpec, EmptyTextWarning, embed_batch, embed_text
from .errors import BuildError, FeedbackParseError, SageError, StageError
from .llm import (
    OPTION_LABELS,
    STRICT_SUFFIX,
    FeedbackVerdict,
    LlmClient,
    LlmRequest,
    build_answer_prompt,
    build_feedback_prompt,
    complete,
    make_client,
    parse_feedback,
)
from .segmenter import SegmentationModel, model_fingerprint, segment_corpus
from .selection import SelectionResult, rerank, select_gradient
from .vector_store import VectorStore

logger = logging.getLogger(__name__)

Termination = Literal["score-accepted", "rounds-exhausted", "feedback_unparseable"]


# building


def read_documents(corpus_dir) -> tuple[list[tuple[str, str]], list[dict]]:
    """``(doc_id, text)`` for every document under ``corpus_dir`` plus a list of unreadable files.

    Each ``*.txt`` file may hold several documents separated by blank lines.
    """
    root = Path(corpus_dir)
    docs, skipped = [], []
    files = sorted(p for p in root.rglob("*.txt") if p.is_file()) if root.is_dir() else []
    for path in files:
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping %s: %s", rel, exc)
            skipped.append({"file": rel, "error": str(exc)})
            continue
        blocks = [b for b in _split_blank(text) if b.strip()]
        for k, block in enumerate(blocks):
            docs.append((rel if len(blocks) == 1 else f"{rel}#{k}", block))
    return docs, skipped


def _split_blank(text: str) -> list[str]:
    blocks, cur = [], []
    for line in text.splitlines():
        if line.strip():
            cur.append(line)
        elif cur:
            blocks.append("\n".join(cur))
            cur = []
    if cur:
        blocks.append("\n".join(cur))
    return blocks


def build_store(docs: Sequence[tuple[str, str]], seg_model: SegmentationModel, config: PipelineConfig) -> VectorStore:
    chunks = []
    for doc_id, text in docs:
        chunks.extend(segment_corpus(text, seg_model, config.embedder, config.ss, config.l, doc_id, len(chunks)))
    if not chunks:
        raise BuildError("corpus produced no chunks")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptyTextWarning)
        vectors = embed_batch([c.text for c in chunks], config.embedder)
    store = VectorStore(
        config.embedder.dimension,
        {
            "embedder": asdict(config.embedder),
            "segmentation_model": model_fingerprint(seg_model),
            "config": config.snapshot(),
            "documents": len(docs),
        },
    )
    for chunk, vec in zip(chunks, vectors):
        store.insert(chunk, vec)
    return store


def build_index(corpus_dir, seg_model: SegmentationModel, config: PipelineConfig, index_dir=None) -> VectorStore:
    docs, skipped = read_documents(corpus_dir)
    if not docs:
        raise BuildError(f"no usable documents under {corpus_dir}")
    store = build_store(docs, seg_model, config)
    store.meta["skipped_files"] = skipped
    if index_dir is not None:
        store.save(index_dir)
    return store


# querying


@dataclass
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0

    def add(self, resp) -> None:
        self.input_tokens += resp.input_tokens
        self.output_tokens += resp.output_tokens


@dataclass
class AnswerRound:
    answer: str
    selection: SelectionResult
    candidates: list[dict]
    chunk_texts: list[str]
    usage: Usage


@dataclass
class RoundRecord:
    round: int
    min_k: int
    candidate_scores: list[dict]
    selected_ids: list[int]
    k_selected: int
    cut_reason: str
    answer: str
    verdict: dict | None
    usage: dict
    stages: list[str]
    feedback_raw: list[str] = field(default_factory=list)


@dataclass
class QueryTrace:
    question: str
    rounds: list[RoundRecord]
    final_answer: str
    total_rounds: int
    termination: Termination
    segmentation: dict

    @property
    def min_k_trajectory(self) -> list[int]:
        return [r.min_k for r in self.rounds]

    @property
    def stages(self) -> list[str]:
        return ["segment"] + [s for r in self.rounds for s in r.stages]

    @property
    def usage(self) -> Usage:
        return Usage(
            sum(r.usage["input_tokens"] for r in self.rounds), sum(r.usage["output_tokens"] for r in self.rounds)
        )

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["min_k_trajectory"] = self.min_k_trajectory
        rec["stages"] = self.stages
        return rec


class Pipeline:
    """Query-time pipeline over a loaded index.

    ``llm`` answers questions; ``feedback_llm`` (defaults to ``llm``) grades answers.
    """

    def __init__(
        self,
        store: VectorStore,
        config: PipelineConfig,
        llm: LlmClient | None = None,
        feedback_llm: LlmClient | None = None,
    ):
        self.store = store
        self.config = config
        self.llm = llm if llm is not None else make_client(config.llm)
        self.feedback_llm = feedback_llm if feedback_llm is not None else self.llm

    @property
    def embed(self) -> EmbedderSpec:
        return self.config.embedder

    def _request(self, prompt: str) -> LlmRequest:
        return LlmRequest(prompt, self.config.llm.model, self.config.llm.max_output_tokens)

    def answer_once(
        self, question: str, min_k: int, qtype: str = "open-ended", options: Sequence[str] | None = None
    ) -> AnswerRound:
        cfg = self.config
        try:
            hits = self.store.query_top_n(embed_text(question, self.embed), cfg.top_n)
        except SageError as exc:
            raise StageError("retrieve", exc) from exc
        candidates = [self.store.chunk(h.chunk_id) for h in hits]
        try:
            ranked = rerank(question, candidates, cfg.reranker, self.embed)
            selection = select_gradient(ranked, min_k, cfg.g)
        except SageError as exc:
            raise StageError("select", exc) from exc
        texts = [self.store.chunk(s.chunk_id).text for s in selection.selected]
        usage = Usage()
        try:
            resp = complete(self._request(build_answer_prompt(question, texts, qtype, options)), self.llm)
        except SageError as exc:
            raise StageError("generate", exc) from exc
        usage.add(resp)
        scored = [{"chunk_id": s.chunk_id, "raw": s.raw_score, "normalized": s.normalized_score} for s in ranked]
        return AnswerRound(resp.text, selection, scored, texts, usage)

    def _feedback(self, question: str, texts: list[str], answer: str, usage: Usage, raw: list[str]):
        prompt = build_feedback_prompt(question, texts, answer or "(empty answer)")
        for attempt_prompt in (prompt, prompt + STRICT_SUFFIX):
            try:
                resp = complete(self._request(attempt_prompt), self.feedback_llm)
            except SageError as exc:
                raise StageError("feedback", exc) from exc
            usage.add(resp)
            raw.append(resp.text)
            try:
                return parse_feedback(resp.text)
            except FeedbackParseError as exc:
                logger.warning("unparseable feedback: %s", exc)
        return None

    def answer_with_feedback(
        self, question: str, qtype: str = "open-ended", options: Sequence[str] | None = None
    ) -> tuple[str, QueryTrace]:
        cfg = self.config
        min_k = cfg.min_k
        rounds: list[RoundRecord] = []
        termination: Termination = "rounds-exhausted"
        answer = ""
        for r in range(1, cfg.max_feedback_rounds + 1):
            step = self.answer_once(question, min_k, qtype, options)
            answer = step.answer
            raw: list[str] = []
            verdict: FeedbackVerdict | None = self._feedback(question, step.chunk_texts, answer, step.usage, raw)
            sel = step.selection
            rounds.append(
                RoundRecord(
                    r,
                    min_k,
                    step.candidates,
                    [s.chunk_id for s in sel.selected],
                    sel.k_selected,
                    sel.cut_reason,
                    answer,
                    asdict(verdict) if verdict else None,
                    asdict(step.usage),
                    ["retrieve", "select", "generate", "feedback"],
                    raw,
                )
            )
            if verdict is None:
                termination = "feedback_unparseable"
                break
            if verdict.quality_score >= cfg.fs:
                termination = "score-accepted"
                break
            if r < cfg.max_feedback_rounds:
                min_k = min(max(min_k + verdict.adjustment, 1), cfg.top_n)
        seg = {"model": self.store.meta.get("segmentation_model"), "chunks": len(self.store)}
        return answer, QueryTrace(question, rounds, answer, len(rounds), termination, seg)


# evaluation


class QaRecord(BaseModel):
    id: str | int
    question: str
    answers: list[str]
    options: list[str] | None = None
    qtype: Literal["multiple-choice", "open-ended"] = "open-ended"

    @field_validator("answers")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("answers must be nonempty")
        return v

    @model_validator(mode="after")
    def _mc_has_options(self):
        if self.qtype == "multiple-choice" and not self.options:
            raise ValueError("multiple-choice record without options")
        return self

    def gold_labels(self) -> list[str]:
        """Gold answers for multiple-choice, as option letters."""
        out = []
        for a in self.answers:
            if self.options and a in self.options:
                out.append(OPTION_LABELS[self.options.index(a)])
            else:
                out.append(a)
        return out


def load_dataset(path) -> tuple[list[QaRecord], int]:
    """Parse a JSONL dataset. Returns the valid records and the number of malformed lines skipped."""
    records, bad = [], 0
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(QaRecord.model_validate(json.loads(line)))
        except (json.JSONDecodeError, ValidationError) as exc:
            logger.warning("skipping malformed record on line %d: %s", n, exc)
            bad += 1
    return records, bad


@dataclass
class QuestionResult:
    id: str | int
    qtype: str
    prediction: str
    golds: list[str]
    scores: dict[str, float]
    trace: QueryTrace


@dataclass
class EvalReport:
    results: list[QuestionResult]
    summary: list[dict]
    n_malformed: int
    input_tokens: int
    output_tokens: int

    def records(self) -> list[dict]:
        out = [
            {
                "id": r.id,
                "qtype": r.qtype,
                "prediction": r.prediction,
                "golds": r.golds,
                "scores": r.scores,
                "trace": r.trace.to_record(),
            }
            for r in self.results
        ]
        out.extend(self.summary)
        out.append({"n_malformed": self.n_malformed, "n_questions": len(self.results)})
        return out

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _score_one(rec: QaRecord, prediction: str) -> dict[str, float]:
    if rec.qtype == "multiple-choice":
        golds = rec.gold_labels()
        return {"accuracy": max(metrics.accuracy([prediction], [g]) for g in golds)}
    return {
        "f1_match": metrics.f1_match(prediction, rec.answers),
        "rouge_l": max(metrics.rouge_l(prediction, g) for g in rec.answers),
        "bleu_1": max(metrics.bleu_n(prediction, g, 1) for g in rec.answers),
        "bleu_4": max(metrics.bleu_n(prediction, g, 4) for g in rec.answers),
    }


def evaluate(pipeline: Pipeline, records: Sequence[QaRecord], n_malformed: int = 0) -> EvalReport:
    cfg = pipeline.config

    def run(rec: QaRecord) -> QuestionResult:
        answer, trace = pipeline.answer_with_feedback(rec.question, rec.qtype, rec.options)
        return QuestionResult(rec.id, rec.qtype, answer, list(rec.answers), _score_one(rec, answer), trace)

    sequential = cfg.concurrency == 1 or pipeline.llm.sequential or pipeline.feedback_llm.sequential
    if sequential:
        results = [run(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            results = list(pool.map(run, records))

    i_t = sum(r.trace.usage.input_tokens for r in results)
    o_t = sum(r.trace.usage.output_tokens for r in results)
    spent = metrics.cost(i_t, o_t, cfg.price_in, cfg.price_out)
    names = sorted({k for r in results for k in r.scores})
    summary = []
    for name in names:
        vals = [r.scores[name] for r in results if name in r.scores]
        value = sum(vals) / len(vals)
        summary.append(
            {
                "metric": name,
                "value": value,
                "n_questions": len(vals),
                "I_t": i_t,
                "O_t": o_t,
                "cost": spent,
                "efficiency": metrics.cost_efficiency(value, spent) if spent > 0 else None,
                "config_fingerprint": cfg.fingerprint(),
            }
        )
    return EvalReport(results, summary, n_malformed, i_t, o_t)
