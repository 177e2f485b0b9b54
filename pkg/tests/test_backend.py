from __future__ import annotations

import json

import httpx
import pytest

from cop.backend import (
    ChatMessage,
    CompletionRequest,
    HttpChatBackend,
    ScriptedBackend,
    ScriptedRule,
    complete_json,
    extract_json_block,
    load_script,
    strip_code_fences,
)
from cop.errors import (
    NoScriptedRule,
    ProviderRefusal,
    StructuredOutputFailure,
    TransportError,
)

VALID_REQ_DOC = {
    "document_type": "User Requirements Document",
    "requirements": {
        "Platform": "Google Earth Engine",
        "Programming_Language": "JavaScript",
        "Analysis_Goal": "Clip Landsat imagery to the Brazilian region.",
        "Data_Source_and_Format": "Landsat imagery",
        "Output_Format": "GeoTIFF",
    },
}


def request_with(text: str, stage: str = "requirement_analysis") -> CompletionRequest:
    return CompletionRequest(
        messages=(ChatMessage("system", "sys"), ChatMessage("user", text)),
        stage_tag=stage,
    )


# ----------------------------------------------------------------------
# request validation


def test_first_message_must_be_system():
    with pytest.raises(ValueError):
        CompletionRequest(
            messages=(ChatMessage("user", "hi"),), stage_tag="requirement_analysis"
        )


def test_stage_tag_is_mandatory_and_known():
    with pytest.raises(ValueError):
        CompletionRequest(
            messages=(ChatMessage("system", "s"),), stage_tag="bogus_stage"
        )


def test_empty_content_is_rejected():
    with pytest.raises(ValueError):
        CompletionRequest(
            messages=(ChatMessage("system", ""),), stage_tag="requirement_analysis"
        )


# ----------------------------------------------------------------------
# scripted backend


def test_matching_rule_fires():
    backend = ScriptedBackend(
        [ScriptedRule("requirement_analysis", "circular area", "R")]
    )
    assert backend.complete(request_with("make a circular area please")) == "R"


def test_zero_rules_fail_loudly():
    with pytest.raises(NoScriptedRule):
        ScriptedBackend([]).complete(request_with("anything"))


def test_stage_tag_must_match():
    backend = ScriptedBackend([ScriptedRule("algorithm_design", "x", "R")])
    with pytest.raises(NoScriptedRule):
        backend.complete(request_with("x", stage="requirement_analysis"))


def test_rules_fire_in_declaration_order():
    backend = ScriptedBackend(
        [
            ScriptedRule("requirement_analysis", "area", "first"),
            ScriptedRule("requirement_analysis", "area", "second"),
        ]
    )
    assert backend.complete(request_with("area")) == "first"
    assert backend.complete(request_with("area")) == "first"


def test_consume_once_moves_to_next_rule():
    backend = ScriptedBackend(
        [
            ScriptedRule("code_debugging", "fix", "rev1", consume_once=True),
            ScriptedRule("code_debugging", "fix", "rev2", consume_once=True),
        ]
    )
    assert backend.complete(request_with("fix", stage="code_debugging")) == "rev1"
    assert backend.complete(request_with("fix", stage="code_debugging")) == "rev2"
    with pytest.raises(NoScriptedRule):
        backend.complete(request_with("fix", stage="code_debugging"))


def test_identical_requests_get_identical_responses():
    backend = ScriptedBackend([ScriptedRule("requirement_analysis", "", "same")])
    first = backend.complete(request_with("q"))
    second = backend.complete(request_with("q"))
    assert first == second == "same"


def test_load_script_roundtrip(tmp_path):
    rules = [ScriptedRule("code_implementation", "goal", "code", True)]
    path = tmp_path / "script.json"
    path.write_text(json.dumps([r.to_jsonable() for r in rules]), encoding="utf-8")
    loaded = load_script(path)
    assert loaded == rules


# ----------------------------------------------------------------------
# extraction helpers


def test_extract_json_from_fenced_block():
    text = 'Sure!\n```json\n{"a": 1}\n```\nDone.'
    assert extract_json_block(text) == {"a": 1}


def test_extract_json_with_surrounding_prose():
    text = 'Here it is {"a": {"b": 2}} as requested'
    assert extract_json_block(text) == {"a": {"b": 2}}


def test_extract_json_none_when_absent():
    assert extract_json_block("there is no object here") is None


def test_strip_code_fences_keeps_inner_code():
    text = "```javascript\nvar x = 1;\n```"
    assert strip_code_fences(text) == "var x = 1;"
    assert strip_code_fences("plain\ncode") == "plain\ncode"


# ----------------------------------------------------------------------
# structured output loop


def test_malformed_then_valid_reasks_once():
    backend = ScriptedBackend(
        [
            ScriptedRule("requirement_analysis", "extract", "not json at all", True),
            ScriptedRule(
                "requirement_analysis", "", json.dumps(VALID_REQ_DOC), False
            ),
        ]
    )
    result = complete_json(
        backend, request_with("extract"), "requirements-doc", max_reasks=2
    )
    assert result.document == VALID_REQ_DOC
    assert result.reask_count == 1


def test_valid_on_first_response_has_zero_reasks():
    backend = ScriptedBackend(
        [ScriptedRule("requirement_analysis", "", json.dumps(VALID_REQ_DOC))]
    )
    result = complete_json(backend, request_with("extract"), "requirements-doc")
    assert result.reask_count == 0


def test_three_malformed_responses_exhaust_the_budget():
    backend = ScriptedBackend([ScriptedRule("requirement_analysis", "", "garbage")])
    with pytest.raises(StructuredOutputFailure) as excinfo:
        complete_json(backend, request_with("extract"), "requirements-doc", max_reasks=2)
    assert len(excinfo.value.attempts) == 3


def test_schema_violations_are_fed_back_to_the_model():
    incomplete = {"document_type": "User Requirements Document", "requirements": {}}
    backend = ScriptedBackend(
        [
            ScriptedRule("requirement_analysis", "extract", json.dumps(incomplete), True),
            ScriptedRule("requirement_analysis", "Platform", json.dumps(VALID_REQ_DOC)),
        ]
    )
    result = complete_json(
        backend, request_with("extract"), "requirements-doc", max_reasks=1
    )
    assert result.reask_count == 1  # the re-ask names the missing fields


def test_unregistered_schema_is_a_programming_error():
    backend = ScriptedBackend([ScriptedRule("requirement_analysis", "", "{}")])
    with pytest.raises(ValueError):
        complete_json(backend, request_with("x"), "no-such-schema")


# ----------------------------------------------------------------------
# HTTP backend


def _http_backend(handler, **kwargs) -> HttpChatBackend:
    transport = httpx.MockTransport(handler)
    return HttpChatBackend(
        model="test-model",
        base_url="http://llm.test/v1",
        api_key="key",
        transport=transport,
        sleep=lambda _: None,
        **kwargs,
    )


def _ok_response(content: str) -> httpx.Response:
    return httpx.Response(
        200, json={"choices": [{"message": {"role": "assistant", "content": content}}]}
    )


def test_http_backend_returns_first_choice_content():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return _ok_response("hello")

    backend = _http_backend(handler)
    out = backend.complete(request_with("hi"))
    assert out == "hello"
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer key"
    assert seen["body"]["model"] == "test-model"
    assert seen["body"]["messages"][0]["role"] == "system"


def test_http_backend_retries_5xx_then_succeeds():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        if calls["n"] < 3:
            return httpx.Response(500, text="boom")
        return _ok_response("recovered")

    backend = _http_backend(handler)
    assert backend.complete(request_with("hi")) == "recovered"
    assert calls["n"] == 3


def test_http_backend_gives_up_after_two_retries():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(503, text="down")

    with pytest.raises(TransportError):
        _http_backend(handler).complete(request_with("hi"))


def test_http_backend_retries_timeouts():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        raise httpx.ConnectTimeout("slow")

    with pytest.raises(TransportError):
        _http_backend(handler).complete(request_with("hi"))
    assert calls["n"] == 3


def test_http_backend_does_not_retry_4xx():
    calls = {"n": 0}

    def handler(request: httpx.Request) -> httpx.Response:
        calls["n"] += 1
        return httpx.Response(401, text="no")

    with pytest.raises(TransportError):
        _http_backend(handler).complete(request_with("hi"))
    assert calls["n"] == 1


def test_empty_content_is_a_provider_refusal():
    def handler(request: httpx.Request) -> httpx.Response:
        return _ok_response("   ")

    with pytest.raises(ProviderRefusal):
        _http_backend(handler).complete(request_with("hi"))


def test_base_url_is_required(monkeypatch):
    monkeypatch.delenv("COP_API_BASE", raising=False)
    with pytest.raises(ValueError):
        HttpChatBackend(model="m")
