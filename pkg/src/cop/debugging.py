"""Stages 4 and 5: the human-feedback debugging state machine and the
annotation pass with mechanical comment-rule checks.

The loop repeats until the user reports the code both runs and is
correct, or the iteration cap is hit; either way it ends in annotation,
with exhaustion surfaced rather than hidden.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any

from .backend import ChatBackend, ChatMessage, CompletionRequest, strip_code_fences
from .config import RunConfig
from .documents import AlgorithmDesignDocument, RequirementsDocument
from .errors import (
    AnnotationInvalid,
    EmptyCode,
    InvalidFeedback,
    UnknownLanguage,
    WrongState,
)
from .implementation import CodeArtifact, PromptContext, PROVENANCE_REPAIRED
from .pool import ArtifactKind, InfoPool
from . import prompts

# Comment tokens per language; unknown languages hard-fail rather than
# guess at syntax.
COMMENT_TOKENS: dict[str, str] = {
    "javascript": "//",
    "python": "#",
    "r": "#",
}


def comment_token(language: str) -> str:
    token = COMMENT_TOKENS.get(language.strip().lower())
    if token is None:
        raise UnknownLanguage(f"no comment token registered for {language!r}")
    return token


class DebugState(str, Enum):
    AWAITING_FEEDBACK = "AwaitingFeedback"
    REPAIRING = "Repairing"
    ANNOTATING = "Annotating"
    DONE = "Done"


@dataclass(frozen=True)
class DebugFeedback:
    executable: bool
    correct: bool = False
    error_text: str | None = None
    observed_output: str | None = None

    def validate(self) -> None:
        if not self.executable:
            if not self.error_text or not self.error_text.strip():
                raise InvalidFeedback(
                    "non-executable feedback must carry the console error text"
                )
        elif not self.correct:
            if not self.observed_output or not self.observed_output.strip():
                raise InvalidFeedback(
                    "executable-but-wrong feedback must describe the observed output"
                )

    @property
    def passed(self) -> bool:
        return self.executable and self.correct

    def summary_text(self) -> str:
        if not self.executable:
            return f"The script did not run. Console error:\n{self.error_text}"
        if not self.correct:
            return f"The script ran but the result is wrong. Observed:\n{self.observed_output}"
        return "The script ran and the result is correct."

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "executable": self.executable,
            "correct": self.correct,
            "error_text": self.error_text,
            "observed_output": self.observed_output,
        }


@dataclass(frozen=True)
class DebugSession:
    iteration: int = 0
    max_iterations: int = 3
    state: DebugState = DebugState.AWAITING_FEEDBACK
    exhausted: bool = False

    def __post_init__(self):
        if self.iteration < 0 or self.max_iterations < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.iteration > self.max_iterations:
            raise ValueError("iteration may not exceed max_iterations")


def next_transition(session: DebugSession, fb: DebugFeedback) -> DebugSession:
    """Pure transition rule.

    Pass feedback goes to annotation; anything else repairs until the
    iteration cap, after which annotation proceeds with exhausted=True.
    """
    if session.state is not DebugState.AWAITING_FEEDBACK:
        raise WrongState(f"cannot accept feedback in state {session.state.value}")
    fb.validate()
    if fb.passed:
        return replace(session, state=DebugState.ANNOTATING, exhausted=False)
    if session.iteration < session.max_iterations:
        return replace(
            session, state=DebugState.REPAIRING, iteration=session.iteration + 1
        )
    return replace(session, state=DebugState.ANNOTATING, exhausted=True)


def repair(
    session: DebugSession,
    code: CodeArtifact,
    fb: DebugFeedback,
    context: PromptContext,
    backend: ChatBackend,
    pool: InfoPool | None = None,
    config: RunConfig | None = None,
) -> CodeArtifact:
    """One repair round: feed the failing code and the user's feedback
    back through the backend and store the next revision."""
    if session.state is not DebugState.REPAIRING:
        raise WrongState(f"repair is not allowed in state {session.state.value}")
    config = config or RunConfig()
    req_json = context.requirements.to_json() if context.ablation.pool else None
    design_json = context.design.to_json() if context.ablation.pool else None
    request = CompletionRequest(
        messages=(
            ChatMessage("system", prompts.DEBUG_SYSTEM),
            ChatMessage(
                "user",
                prompts.debug_user(req_json, design_json, code.source, fb.summary_text()),
            ),
        ),
        stage_tag="code_debugging",
        temperature=config.temperature_code,
        max_tokens=config.max_tokens,
    )
    source = strip_code_fences(backend.complete(request))
    if not source.strip():
        raise EmptyCode("repair produced no code")
    revision = code.revision + 1
    if pool is not None:
        entry = pool.put(ArtifactKind.CODE_DRAFT, source)
        revision = entry.revision
        transcript_entry = {
            "iteration": session.iteration,
            "feedback": fb.to_jsonable(),
            "revision": revision,
        }
        existing = pool.get(ArtifactKind.DEBUG_TRANSCRIPT)
        entries = list(existing.payload) if existing else []
        entries.append(transcript_entry)
        pool.put(ArtifactKind.DEBUG_TRANSCRIPT, entries)
    return CodeArtifact(
        language=code.language,
        platform=code.platform,
        source=source,
        revision=revision,
        provenance=PROVENANCE_REPAIRED,
    )


@dataclass(frozen=True)
class AnnotatedCode:
    header: dict[str, str]  # created_at, platform, summary
    body: str
    comment_token: str
    text: str  # full rendered form, header lines first


_HEADER_LABELS = ("created", "platform", "summary")


def _split_lines(text: str) -> list[str]:
    return text.split("\n")


def _is_comment(line: str, token: str) -> bool:
    return line.lstrip().startswith(token)


def _leading_comment_block(lines: list[str], token: str) -> list[str]:
    block = []
    for line in lines:
        if not _is_comment(line, token):
            break
        block.append(line)
    return block


def _statement_multiset(text: str, token: str) -> Counter:
    """Non-comment, non-blank lines with whitespace collapsed."""
    statements: Counter = Counter()
    for line in _split_lines(text):
        stripped = line.strip()
        if not stripped or stripped.startswith(token):
            continue
        statements[re.sub(r"\s+", " ", stripped)] += 1
    return statements


def check_annotation(
    annotated: AnnotatedCode | str,
    design: AlgorithmDesignDocument,
    language: str,
    original: str | None = None,
) -> list[str]:
    """Mechanical comment rules.

    Flags a missing or incomplete header, fewer comment lines than
    design modules, comment lines written with another language's
    token, and any change to the multiset of executable lines.
    """
    token = comment_token(language)
    text = annotated.text if isinstance(annotated, AnnotatedCode) else annotated
    lines = _split_lines(text)
    violations: list[str] = []

    header = _leading_comment_block(lines, token)
    if not header:
        violations.append("missing header")
    else:
        header_text = "\n".join(header).lower()
        absent = [label for label in _HEADER_LABELS if label not in header_text]
        if absent:
            violations.append("incomplete header: missing " + ", ".join(absent))

    body_lines = lines[len(header):]
    comment_count = sum(1 for line in body_lines if _is_comment(line, token))
    module_count = len(design.modules)
    if comment_count < module_count:
        violations.append(f"comments({comment_count}) < modules({module_count})")

    wrong_tokens = {t for t in COMMENT_TOKENS.values() if t != token}
    for line in lines:
        stripped = line.lstrip()
        if any(stripped.startswith(t) for t in wrong_tokens) and not stripped.startswith(token):
            violations.append("wrong comment token")
            break

    if original is not None:
        if _statement_multiset(text, token) != _statement_multiset(original, token):
            violations.append("body drift")
    return violations


def parse_annotated(text: str, language: str) -> AnnotatedCode:
    token = comment_token(language)
    lines = _split_lines(text)
    header_lines = _leading_comment_block(lines, token)
    header: dict[str, str] = {}
    for line in header_lines:
        content = line.lstrip()[len(token):].strip()
        for label, key in (("created", "created_at"), ("platform", "platform"), ("summary", "summary")):
            if content.lower().startswith(label):
                header[key] = content.split(":", 1)[1].strip() if ":" in content else ""
    body = "\n".join(lines[len(header_lines):]).lstrip("\n")
    return AnnotatedCode(header=header, body=body, comment_token=token, text=text)


def annotate(
    session: DebugSession,
    code: CodeArtifact,
    req: RequirementsDocument,
    design: AlgorithmDesignDocument,
    backend: ChatBackend,
    pool: InfoPool | None = None,
    config: RunConfig | None = None,
    created_at: str = "",
) -> AnnotatedCode:
    """Final stage: comment the code, validate the rules, store it.

    The backend gets exactly one corrective re-ask before the run is
    declared AnnotationInvalid.
    """
    if session.state is not DebugState.ANNOTATING:
        raise WrongState(f"annotate is not allowed in state {session.state.value}")
    config = config or RunConfig()
    token = comment_token(code.language)
    req_json = req.to_json() if config.ablation.pool else None
    design_json = design.to_json() if config.ablation.pool else None
    user = prompts.annotation_user(
        req_json, design_json, code.source, created_at, code.platform, token
    )
    messages = [
        ChatMessage("system", prompts.ANNOTATION_SYSTEM),
        ChatMessage("user", user),
    ]
    violations: list[str] = []
    for _ in range(2):  # initial ask + one corrective re-ask
        request = CompletionRequest(
            messages=tuple(messages),
            stage_tag="code_annotation",
            temperature=config.temperature_code,
            max_tokens=config.max_tokens,
        )
        text = strip_code_fences(backend.complete(request))
        violations = check_annotation(text, design, code.language, original=code.source)
        if not violations:
            annotated = parse_annotated(text, code.language)
            if pool is not None:
                pool.put(ArtifactKind.ANNOTATED_CODE, annotated.text)
            return annotated
        messages.append(ChatMessage("assistant", text))
        messages.append(
            ChatMessage(
                "user",
                "The annotated script broke these rules, fix them and resend "
                "the whole script:\n- " + "\n- ".join(violations),
            )
        )
    raise AnnotationInvalid(violations[0], violations)
