"""Chat-completion backends: a real OpenAI-compatible HTTP client and a
scripted deterministic twin for tests and desk-scale evaluation, plus
the structured-output loop (extract JSON, validate, bounded re-ask).
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

from .documents import SCHEMAS
from .errors import (
    NoScriptedRule,
    ParseError,
    ProviderRefusal,
    StructuredOutputFailure,
    TransportError,
)

STAGE_TAGS = (
    "requirement_analysis",
    "algorithm_design",
    "code_implementation",
    "code_debugging",
    "code_annotation",
)


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str


@dataclass(frozen=True)
class CompletionRequest:
    messages: tuple[ChatMessage, ...]
    stage_tag: str
    temperature: float = 0.0
    max_tokens: int = 4096

    def __post_init__(self):
        if self.stage_tag not in STAGE_TAGS:
            raise ValueError(f"unknown stage_tag: {self.stage_tag!r}")
        if not self.messages:
            raise ValueError("request must carry at least one message")
        if self.messages[0].role != "system":
            raise ValueError("first message of a stage request must be system")
        for msg in self.messages:
            if not msg.content:
                raise ValueError("message content must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    def last_user_content(self) -> str:
        for msg in reversed(self.messages):
            if msg.role == "user":
                return msg.content
        return ""


class ChatBackend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


@dataclass
class ScriptedRule:
    """One canned response: fires when the request's stage matches and
    ``match_substring`` occurs in the last user message."""

    stage_tag: str
    match_substring: str
    response: str
    consume_once: bool = False

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "stage_tag": self.stage_tag,
            "match_substring": self.match_substring,
            "response": self.response,
            "consume_once": self.consume_once,
        }


class ScriptedBackend:
    """Deterministic backend: rules are tried in declaration order and
    at most one fires per request. No match is a hard error so broken
    fixtures fail loudly instead of silently corrupting a run."""

    def __init__(self, rules: list[ScriptedRule] | None = None):
        self._rules = list(rules or [])
        self._spent: set[int] = set()
        self._lock = threading.Lock()

    def add_rule(self, rule: ScriptedRule) -> None:
        self._rules.append(rule)

    def complete(self, request: CompletionRequest) -> str:
        target = request.last_user_content()
        with self._lock:
            for idx, rule in enumerate(self._rules):
                if idx in self._spent:
                    continue
                if rule.stage_tag != request.stage_tag:
                    continue
                if rule.match_substring in target:
                    if rule.consume_once:
                        self._spent.add(idx)
                    return rule.response
        raise NoScriptedRule(
            f"no scripted rule for stage {request.stage_tag!r}"
            f" and message starting {target[:80]!r}"
        )


def load_script(path: str | Path) -> list[ScriptedRule]:
    """Read a script file: a JSON array of rule objects."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot load script {path}: {exc}") from exc
    if not isinstance(data, list):
        raise ParseError(f"{path}: expected a JSON array of rules")
    rules = []
    for i, raw in enumerate(data):
        try:
            rules.append(
                ScriptedRule(
                    stage_tag=raw["stage_tag"],
                    match_substring=raw["match_substring"],
                    response=raw["response"],
                    consume_once=bool(raw.get("consume_once", False)),
                )
            )
        except (TypeError, KeyError) as exc:
            raise ParseError(f"{path}: rule {i} malformed: {exc}") from exc
    return rules


class HttpChatBackend:
    """OpenAI-compatible chat client.

    POSTs {base_url}/chat/completions with bearer auth; base URL and key
    default to the COP_API_BASE / COP_API_KEY environment variables.
    Timeouts, connect errors, and 5xx responses are retried twice with
    exponential backoff before surfacing as TransportError.
    """

    def __init__(
        self,
        model: str,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 2,
        backoff: float = 0.5,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        base = base_url or os.environ.get("COP_API_BASE")
        if not base:
            raise ValueError("no base URL: pass base_url or set COP_API_BASE")
        self._base_url = base.rstrip("/")
        self._api_key = api_key if api_key is not None else os.environ.get("COP_API_KEY", "")
        self._model = model
        self._max_retries = max_retries
        self._backoff = backoff
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": self._model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        last_error: Exception | None = None
        for attempt in range(self._max_retries + 1):
            if attempt:
                self._sleep(self._backoff * 2 ** (attempt - 1))
            try:
                response = self._client.post(
                    f"{self._base_url}/chat/completions",
                    json=payload,
                    headers=headers,
                )
            except httpx.TimeoutException as exc:
                last_error = exc
                continue
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = TransportError(f"server error {response.status_code}")
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"request rejected: {response.status_code} {response.text[:200]}"
                )
            try:
                content = response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise TransportError(f"malformed completion response: {exc}") from exc
            if not content or not content.strip():
                raise ProviderRefusal("backend returned empty content")
            return content
        raise TransportError(f"exhausted retries: {last_error}")


class RecordingBackend:
    """Wrapper that captures every request so tests and ablation runs
    can assert on the exact prompts each stage assembled."""

    def __init__(self, inner: ChatBackend):
        self._inner = inner
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> str:
        self.requests.append(request)
        return self._inner.complete(request)

    def prompts_for(self, stage_tag: str) -> list[str]:
        return [
            r.last_user_content() for r in self.requests if r.stage_tag == stage_tag
        ]


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def extract_json_block(text: str) -> Any | None:
    """Pull the first JSON object out of a model response.

    Tolerates fenced blocks and leading/trailing prose; returns None
    when nothing parseable is found.
    """
    fenced = _FENCE_RE.search(text)
    if fenced:
        candidate = fenced.group(1).strip()
        try:
            return json.loads(candidate)
        except json.JSONDecodeError:
            text = candidate  # fall through: scan inside the fence
    decoder = json.JSONDecoder()
    for start in range(len(text)):
        if text[start] != "{":
            continue
        try:
            value, _ = decoder.raw_decode(text[start:])
        except json.JSONDecodeError:
            continue
        if isinstance(value, dict):
            return value
    return None


def strip_code_fences(text: str) -> str:
    """Return fenced content when present, else the stripped text."""
    fenced = _FENCE_RE.search(text)
    if fenced:
        return fenced.group(1).strip("\n")
    return text.strip("\n")


@dataclass
class StructuredResult:
    document: dict[str, Any]
    reask_count: int
    raw_responses: list[str] = field(default_factory=list)


def complete_json(
    backend: ChatBackend,
    request: CompletionRequest,
    schema_id: str,
    max_reasks: int = 2,
) -> StructuredResult:
    """Ask for a document, validate it, and re-ask with the violation
    list appended until it passes or the budget runs out."""
    if schema_id not in SCHEMAS:
        raise ValueError(f"unregistered schema: {schema_id!r}")
    validator = SCHEMAS[schema_id]
    messages = list(request.messages)
    attempts: list[list[str]] = []
    raw_responses: list[str] = []
    for reask in range(max_reasks + 1):
        current = CompletionRequest(
            messages=tuple(messages),
            stage_tag=request.stage_tag,
            temperature=request.temperature,
            max_tokens=request.max_tokens,
        )
        text = backend.complete(current)
        raw_responses.append(text)
        document = extract_json_block(text)
        if document is None:
            violations = ["no JSON object found in the response"]
        else:
            violations = validator(document)
        if not violations:
            assert document is not None
            return StructuredResult(
                document=document, reask_count=reask, raw_responses=raw_responses
            )
        attempts.append(violations)
        messages.append(ChatMessage(role="assistant", content=text))
        messages.append(
            ChatMessage(
                role="user",
                content=(
                    "The previous response was not a valid document. Fix these "
                    "problems and respond with only the corrected JSON:\n- "
                    + "\n- ".join(violations)
                ),
            )
        )
    raise StructuredOutputFailure(
        f"no schema-valid response after {max_reasks} re-asks", attempts
    )
