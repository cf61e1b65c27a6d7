"""Chat-completion clients, prompt templates and feedback parsing."""

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Protocol, Sequence

from ._http import JsonService
from .errors import ContractViolation, FeedbackParseError, RetryableError, ScriptExhaustedError
from .tokens import count_tokens

LLM_KEY_ENV = "SAGE_LLM_API_KEY"
OPTION_LABELS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class LlmRequest:
    prompt: str
    model: str = ""
    max_output_tokens: int = 512


@dataclass(frozen=True)
class LlmResponse:
    text: str
    input_tokens: int
    output_tokens: int


@dataclass(frozen=True)
class FeedbackVerdict:
    quality_score: int
    adjustment: int

    def __post_init__(self):
        if not 1 <= self.quality_score <= 10 or self.adjustment not in (-1, 1):
            raise ContractViolation(f"invalid verdict {self}")


class LlmClient(Protocol):
    sequential: bool

    def complete(self, req: LlmRequest) -> LlmResponse: ...


class ScriptedLLM:
    """Replays canned responses in order. Missing token counts fall back to the local tokenizer."""

    sequential = True

    def __init__(self, script: Sequence[str | dict]):
        self._items = [{"response_text": s} if isinstance(s, str) else dict(s) for s in script]
        self._pos = 0
        self.calls: list[LlmRequest] = []

    @classmethod
    def from_jsonl(cls, path) -> "ScriptedLLM":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls([json.loads(line) for line in lines if line.strip()])

    @property
    def remaining(self) -> int:
        return len(self._items) - self._pos

    def complete(self, req: LlmRequest) -> LlmResponse:
        if self._pos >= len(self._items):
            raise ScriptExhaustedError(f"script exhausted after {len(self._items)} responses")
        item = self._items[self._pos]
        self._pos += 1
        self.calls.append(req)
        text = item["response_text"]
        return LlmResponse(
            text,
            int(item.get("input_tokens", count_tokens(req.prompt))),
            int(item.get("output_tokens", count_tokens(text))),
        )


class EchoLLM:
    """Answers with the first context passage of the prompt. Offline stand-in for a reader model."""

    sequential = False

    def __init__(self):
        self.calls: list[LlmRequest] = []
        self._lock = threading.Lock()

    def complete(self, req: LlmRequest) -> LlmResponse:
        with self._lock:
            self.calls.append(req)
        passages = parse_context(req.prompt)
        text = passages[0] if passages else ""
        return LlmResponse(text, count_tokens(req.prompt), count_tokens(text))


class RemoteLLM:
    """Client for an OpenAI-style ``/chat/completions`` endpoint."""

    sequential = False

    def __init__(
        self,
        endpoint: str,
        model: str,
        *,
        max_attempts: int = 3,
        max_in_flight: int = 4,
        backoff: float = 0.5,
        transport=None,
    ):
        self.model = model
        self.service = JsonService(
            endpoint,
            LLM_KEY_ENV,
            max_attempts=max_attempts,
            max_in_flight=max_in_flight,
            backoff=backoff,
            transport=transport,
        )

    def complete(self, req: LlmRequest) -> LlmResponse:
        payload = {
            "model": req.model or self.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "max_tokens": req.max_output_tokens,
        }
        body = self.service.post(payload)
        try:
            text = body["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise RetryableError(f"malformed completion response: {exc}", self.service.url) from exc
        usage = body.get("usage") or {}
        return LlmResponse(
            text,
            int(usage.get("prompt_tokens", count_tokens(req.prompt))),
            int(usage.get("completion_tokens", count_tokens(text))),
        )


def complete(req: LlmRequest, client: LlmClient) -> LlmResponse:
    if not req.prompt:
        raise ContractViolation("empty prompt")
    return client.complete(req)


# prompts

_CTX_OPEN = "<<passage {n}>>"
_CTX_CLOSE = "<</passage>>"
_CTX_RE = re.compile(r"<<passage \d+>>\n(.*?)\n<</passage>>", re.DOTALL)


def _context_block(chunks: Sequence[str]) -> str:
    return "\n".join(f"{_CTX_OPEN.format(n=i)}\n{text}\n{_CTX_CLOSE}" for i, text in enumerate(chunks, 1))


def parse_context(prompt: str) -> list[str]:
    return _CTX_RE.findall(prompt)


def build_answer_prompt(
    question: str,
    chunks: Sequence[str],
    qtype: Literal["multiple-choice", "open-ended"] = "open-ended",
    options: Sequence[str] | None = None,
) -> str:
    if not chunks:
        raise ContractViolation("answer prompt needs at least one context chunk")
    parts = [
        "Answer the question using only the passages below.",
        "",
        "Passages:",
        _context_block(chunks),
        "",
        f"Question: {question}",
    ]
    if qtype == "multiple-choice":
        if not options:
            raise ContractViolation("multiple-choice question without options")
        if len(options) > len(OPTION_LABELS):
            raise ContractViolation("too many options")
        parts.append("Options:")
        parts.extend(f"({OPTION_LABELS[i]}) {opt}" for i, opt in enumerate(options))
        parts += ["", "Reply with the letter of exactly one option and nothing else."]
    elif qtype == "open-ended":
        parts += ["", "Reply with a short answer."]
    else:
        raise ContractViolation(f"unknown question type {qtype!r}")
    return "\n".join(parts) + "\n"


STRICT_SUFFIX = (
    "\nYour previous reply could not be parsed. Reply with exactly two lines and nothing else:\n"
    "SCORE: <integer 1-10>\nADJUST: <-1 or 1>\n"
)


def build_feedback_prompt(question: str, chunks: Sequence[str], answer: str) -> str:
    if not answer:
        raise ContractViolation("feedback needs a nonempty answer")
    return "\n".join(
        [
            "You are reviewing an answer produced from retrieved passages.",
            "",
            "Passages:",
            _context_block(chunks) if chunks else "(none)",
            "",
            f"Question: {question}",
            "",
            "Answer:",
            answer,
            "",
            "1. Rate how well the answer addresses the question, from 1 (useless) to 10 (fully correct).",
            "2. Judge the passages: -1 if they contain redundant or irrelevant material,"
            " 1 if information needed to answer is missing.",
            "",
            "Finish with these two lines:",
            "SCORE: <1-10>",
            "ADJUST: <-1|1>",
        ]
    ) + "\n"


_SCORE_RE = re.compile(r"SCORE:\s*([+-]?\d+)")
_ADJUST_RE = re.compile(r"ADJUST:\s*([+-]?\d+)")


def parse_feedback(text: str) -> FeedbackVerdict:
    score = _SCORE_RE.search(text)
    adjust = _ADJUST_RE.search(text)
    if score is None or adjust is None:
        raise FeedbackParseError("missing SCORE or ADJUST field", text)
    s, a = int(score.group(1)), int(adjust.group(1))
    if not 1 <= s <= 10:
        raise FeedbackParseError(f"SCORE {s} outside 1-10", text)
    if a not in (-1, 1):
        raise FeedbackParseError(f"ADJUST {a} is not -1 or 1", text)
    return FeedbackVerdict(s, a)


def render_verdict(v: FeedbackVerdict) -> str:
    return f"SCORE: {v.quality_score}\nADJUST: {v.adjustment}"


@dataclass(frozen=True)
class LlmSpec:
    kind: Literal["remote", "echo", "scripted"] = "echo"
    endpoint: str | None = None
    model: str = ""
    script: str | None = None  # JSONL path for kind="scripted"
    max_output_tokens: int = 512
    max_attempts: int = 3
    max_in_flight: int = 4


def make_client(spec: LlmSpec) -> LlmClient:
    if spec.kind == "echo":
        return EchoLLM()
    if spec.kind == "scripted":
        if not spec.script:
            raise ContractViolation("scripted LLM needs a script path")
        return ScriptedLLM.from_jsonl(spec.script)
    if spec.kind == "remote":
        if not spec.endpoint:
            raise ContractViolation("remote LLM needs an endpoint")
        return RemoteLLM(spec.endpoint, spec.model, max_attempts=spec.max_attempts, max_in_flight=spec.max_in_flight)
    raise ContractViolation(f"unknown LLM kind {spec.kind!r}")
