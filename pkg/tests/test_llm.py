import json

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sage_rag.errors import ContractViolation, FeedbackParseError, RetryableError, ScriptExhaustedError
from sage_rag.llm import (
    EchoLLM,
    FeedbackVerdict,
    LlmRequest,
    RemoteLLM,
    ScriptedLLM,
    build_answer_prompt,
    build_feedback_prompt,
    complete,
    parse_context,
    parse_feedback,
    render_verdict,
)


def test_scripted_returns_in_order():
    llm = ScriptedLLM(["A", "B"])
    assert complete(LlmRequest("first prompt"), llm).text == "A"
    assert complete(LlmRequest("second prompt"), llm).text == "B"
    with pytest.raises(ScriptExhaustedError):
        complete(LlmRequest("third"), llm)


def test_scripted_token_accounting():
    llm = ScriptedLLM(["A", {"response_text": "B c", "input_tokens": 100, "output_tokens": 9}])
    r = complete(LlmRequest("one two three, four five six"), llm)  # 7 local tokens
    assert (r.input_tokens, r.output_tokens) == (7, 1)
    r = complete(LlmRequest("x"), llm)
    assert (r.input_tokens, r.output_tokens) == (100, 9)


def test_scripted_from_jsonl(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text('{"response_text": "hi"}\n\n{"response_text": "there", "output_tokens": 4}\n')
    llm = ScriptedLLM.from_jsonl(path)
    assert llm.remaining == 2
    assert complete(LlmRequest("p"), llm).text == "hi"


def test_empty_prompt_rejected():
    with pytest.raises(ContractViolation):
        complete(LlmRequest(""), ScriptedLLM(["x"]))


def test_answer_prompt_deterministic_and_ordered():
    chunks = ["second best", "best", "third"]
    p1 = build_answer_prompt("Q?", chunks)
    assert p1 == build_answer_prompt("Q?", chunks)
    assert parse_context(p1) == chunks


def test_multiple_choice_prompt():
    p = build_answer_prompt("Which?", ["c1", "c2"], "multiple-choice", ["red", "green", "blue", "gray"])
    for label in "ABCD":
        assert p.count(f"({label})") == 1
    with pytest.raises(ContractViolation):
        build_answer_prompt("Which?", ["c1"], "multiple-choice")
    with pytest.raises(ContractViolation):
        build_answer_prompt("Which?", [])


def test_feedback_prompt():
    p = build_feedback_prompt("Q?", ["a", "b", "c"], "The answer is 42.")
    assert p == build_feedback_prompt("Q?", ["a", "b", "c"], "The answer is 42.")
    assert "The answer is 42." in p
    assert len(parse_context(p)) == 3
    assert "SCORE:" in p and "ADJUST:" in p
    with pytest.raises(ContractViolation):
        build_feedback_prompt("Q?", ["a"], "")


def test_parse_feedback():
    assert parse_feedback("SCORE: 9\nADJUST: -1") == FeedbackVerdict(9, -1)
    assert parse_feedback("The score is SCORE: 7, ADJUST: 1 because...") == FeedbackVerdict(7, 1)
    assert parse_feedback("SCORE: 3 ADJUST: +1 SCORE: 10") == FeedbackVerdict(3, 1)
    for bad in ("SCORE: 11\nADJUST: 1", "SCORE: 0\nADJUST: 1", "SCORE: 5\nADJUST: 0", "SCORE: 5", "nothing"):
        with pytest.raises(FeedbackParseError) as info:
            parse_feedback(bad)
        assert info.value.raw == bad


@given(st.integers(1, 10), st.sampled_from([-1, 1]))
def test_parse_render_identity(score, adj):
    v = FeedbackVerdict(score, adj)
    assert parse_feedback(render_verdict(v)) == v


def test_echo_llm_returns_first_passage():
    prompt = build_answer_prompt("Q?", ["top chunk text", "other"])
    assert complete(LlmRequest(prompt), EchoLLM()).text == "top chunk text"


def _remote(handler, **kw):
    return RemoteLLM("http://llm.test/v1/chat/completions", "tiny", transport=httpx.MockTransport(handler), backoff=0, **kw)


def test_remote_llm_protocol(monkeypatch):
    monkeypatch.setenv("SAGE_LLM_API_KEY", "k")
    seen = {}

    def handler(request):
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers["authorization"]
        return httpx.Response(
            200,
            json={"choices": [{"message": {"content": "Paris"}}], "usage": {"prompt_tokens": 12, "completion_tokens": 1}},
        )

    r = complete(LlmRequest("Capital of France?", max_output_tokens=5), _remote(handler))
    assert r.text == "Paris" and (r.input_tokens, r.output_tokens) == (12, 1)
    assert seen["body"] == {
        "model": "tiny",
        "messages": [{"role": "user", "content": "Capital of France?"}],
        "max_tokens": 5,
    }
    assert seen["auth"] == "Bearer k"


def test_remote_llm_usage_fallback():
    def handler(request):
        return httpx.Response(200, json={"choices": [{"message": {"content": "two words"}}]})

    r = complete(LlmRequest("three token prompt"), _remote(handler))
    assert (r.input_tokens, r.output_tokens) == (3, 2)


def test_remote_llm_bounded_retries():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(503)
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    assert complete(LlmRequest("p"), _remote(handler, max_attempts=3)).text == "ok"
    calls.clear()
    llm = _remote(handler, max_attempts=2)
    with pytest.raises(RetryableError):
        complete(LlmRequest("p"), llm)
    assert len(calls) == 2 and llm.service.attempts_made == 2


def test_remote_llm_timeout_is_retryable():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    with pytest.raises(RetryableError) as info:
        complete(LlmRequest("p"), _remote(handler, max_attempts=1))
    assert info.value.endpoint == "http://llm.test/v1/chat/completions"
