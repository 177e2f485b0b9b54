"""Interactive sessions: one per code-generation task.

A session drives the five stages synchronously, records every state
change in an append-only event log, and can be reconstructed from that
log alone (replay performs no backend calls; payloads carry the
recorded responses). Pool-entry timestamps ride inside event payloads
so a replayed session's snapshot is byte-identical to the live one.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from .backend import ChatBackend
from .clock import Clock, SystemClock
from .config import RunConfig
from .debugging import (
    AnnotatedCode,
    DebugFeedback,
    DebugSession,
    DebugState,
    annotate,
    next_transition,
    parse_annotated,
    repair,
)
from .documents import AlgorithmDesignDocument, RequirementsDocument
from .errors import (
    BackendUnavailable,
    ClarificationExhausted,
    CopError,
    CorruptLog,
    WrongPhase,
)
from .implementation import (
    CodeArtifact,
    PromptContext,
    PROVENANCE_GENERATED,
    PROVENANCE_REPAIRED,
    SupportHits,
    assemble_context,
    generate,
    retrieve_support,
)
from .kb import KbCatalog
from .pool import ArtifactKind, InfoPool
from .requirements import (
    ClarificationRequest,
    ConditionalFlags,
    RawElements,
    build_clarification,
    check_completeness,
    classify_conditional_need,
    effective_flags,
    extract_elements,
    finalize,
    merge_answers,
)
from . import design as design_stage


class Phase(str, Enum):
    CLARIFYING = "Clarifying"
    DESIGNING = "Designing"
    GENERATING = "Generating"
    AWAITING_FEEDBACK = "AwaitingFeedback"
    ANNOTATING = "Annotating"
    DONE = "Done"
    FAILED = "Failed"


class EventKind(str, Enum):
    TASK_CREATED = "TaskCreated"
    CLARIFICATION_ASKED = "ClarificationAsked"
    ANSWERS_RECEIVED = "AnswersReceived"
    STAGE_COMPLETED = "StageCompleted"
    FEEDBACK_RECEIVED = "FeedbackReceived"
    REPAIR_PRODUCED = "RepairProduced"
    ANNOTATION_PRODUCED = "AnnotationProduced"
    FAILED = "Failed"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    timestamp: str
    kind: EventKind
    payload: dict[str, Any]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_jsonable(cls, data: dict[str, Any]) -> "SessionEvent":
        return cls(
            seq=data["seq"],
            timestamp=data["timestamp"],
            kind=EventKind(data["kind"]),
            payload=data["payload"],
        )


def new_session_id() -> str:
    return secrets.token_hex(16)


class Session:
    """One task's run through the pipeline."""

    def __init__(
        self,
        requirement_text: str,
        config: RunConfig | None = None,
        backend: ChatBackend | None = None,
        kbs: KbCatalog | None = None,
        clock: Clock | None = None,
        session_id: str | None = None,
    ):
        if not requirement_text or not requirement_text.strip():
            raise ValueError("requirement_text must be non-empty")
        self.id = session_id or new_session_id()
        self.requirement_text = requirement_text
        self.config = config or RunConfig()
        self.backend = backend
        self.kbs = kbs or KbCatalog()
        self.clock: Clock = clock or SystemClock()
        self.pool = InfoPool(clock=self.clock)
        self.events: list[SessionEvent] = []
        self.phase = Phase.DESIGNING  # transient until start() settles it
        self.raw = RawElements()
        self.flags = ConditionalFlags(False, False)
        self.clar_round = 0
        self.pending_clarification: ClarificationRequest | None = None
        self.requirements: RequirementsDocument | None = None
        self.design: AlgorithmDesignDocument | None = None
        self.context: PromptContext | None = None
        self.artifacts: list[CodeArtifact] = []
        self.debug: DebugSession | None = None
        self.annotated: AnnotatedCode | None = None
        self.exhausted = False
        self.failure: dict[str, str] | None = None
        self._event_sink: Callable[[SessionEvent], None] | None = None

    # ------------------------------------------------------------------
    # event plumbing

    def on_event(self, sink: Callable[[SessionEvent], None]) -> None:
        self._event_sink = sink

    def _append(self, kind: EventKind, payload: dict[str, Any]) -> SessionEvent:
        event = SessionEvent(
            seq=len(self.events) + 1,
            timestamp=self.clock.now(),
            kind=kind,
            payload=payload,
        )
        self.events.append(event)
        if self._event_sink is not None:
            self._event_sink(event)
        return event

    def _record_failure(self, exc: Exception) -> None:
        self.failure = {"error": type(exc).__name__, "message": str(exc)}
        self.phase = Phase.FAILED
        self._append(EventKind.FAILED, dict(self.failure))

    def _require_backend(self) -> ChatBackend:
        if self.backend is None:
            raise BackendUnavailable("session has no chat backend configured")
        return self.backend

    # ------------------------------------------------------------------
    # pipeline

    def start(self) -> None:
        """Run requirement analysis; continue through generation unless
        clarification is needed."""
        self._append(
            EventKind.TASK_CREATED,
            {
                "session_id": self.id,
                "requirement_text": self.requirement_text,
                "config": self.config.to_jsonable(),
            },
        )
        try:
            backend = self._require_backend()
            self.raw = extract_elements(self.requirement_text, backend, self.config)
            self._advance_requirements()
        except CopError as exc:
            self._record_failure(exc)
            raise

    def answer(self, answers: dict[str, str]) -> None:
        """Clarification answers; loop or proceed."""
        if self.phase is not Phase.CLARIFYING:
            raise WrongPhase(f"answers not accepted in phase {self.phase.value}")
        merged = merge_answers(self.raw, answers)  # validates before any event
        self._append(EventKind.ANSWERS_RECEIVED, {"answers": dict(answers)})
        self.raw = merged
        try:
            self._advance_requirements()
        except CopError as exc:
            if self.phase is not Phase.FAILED:
                self._record_failure(exc)
            raise

    def feedback(self, fb: DebugFeedback) -> None:
        """Debug feedback; repair or move to annotation."""
        if self.phase is not Phase.AWAITING_FEEDBACK:
            raise WrongPhase(f"feedback not accepted in phase {self.phase.value}")
        fb.validate()  # request error, no event
        assert self.debug is not None
        transitioned = next_transition(self.debug, fb)
        self._append(
            EventKind.FEEDBACK_RECEIVED,
            {
                "feedback": fb.to_jsonable(),
                "iteration_before": self.debug.iteration,
                "state_after": transitioned.state.value,
                "exhausted": transitioned.exhausted,
            },
        )
        self.debug = transitioned
        try:
            if transitioned.state is DebugState.REPAIRING:
                self._run_repair(fb)
            else:
                self.exhausted = transitioned.exhausted
                self._run_annotation()
        except CopError as exc:
            if self.phase is not Phase.FAILED:
                self._record_failure(exc)
            raise

    # ------------------------------------------------------------------
    # stage drivers

    def _advance_requirements(self) -> None:
        backend = self._require_backend()
        if self.raw.analysis_goal:
            base = classify_conditional_need(
                self.raw.analysis_goal, backend, self.config
            )
            self.flags = effective_flags(self.raw, base)
        else:
            self.flags = ConditionalFlags(False, False)
        report = check_completeness(self.raw, self.flags)
        if report.overall != "Complete":
            next_round = self.clar_round + 1
            if next_round > self.config.max_clarification_rounds:
                raise ClarificationExhausted(
                    f"still incomplete after {self.clar_round} clarification rounds"
                )
            self.clar_round = next_round
            clar = build_clarification(report)
            self.pending_clarification = clar
            self.phase = Phase.CLARIFYING
            self._append(
                EventKind.CLARIFICATION_ASKED,
                {
                    "round": self.clar_round,
                    "missing": clar.missing,
                    "prompt_text": clar.prompt_text,
                    "elements": self.raw.as_dict(),
                    "flags": {
                        "spatial_needed": self.flags.spatial_needed,
                        "temporal_needed": self.flags.temporal_needed,
                    },
                },
            )
            return
        self.pending_clarification = None
        self.phase = Phase.DESIGNING
        self.requirements = finalize(
            self.raw, self.flags, backend, pool=self.pool, config=self.config
        )
        entry = self.pool.get(ArtifactKind.REQUIREMENTS_DOC)
        assert entry is not None
        self._append(
            EventKind.STAGE_COMPLETED,
            {
                "stage": "requirement_analysis",
                "document": self.requirements.to_json(),
                "provenance": dict(self.requirements.provenance),
                "stored_at": entry.created_at,
            },
        )
        self._run_design()

    def _run_design(self) -> None:
        backend = self._require_backend()
        assert self.requirements is not None
        self.design = design_stage.design(
            self.requirements, backend, pool=self.pool, config=self.config
        )
        entry = self.pool.get(ArtifactKind.ALGORITHM_DESIGN)
        assert entry is not None
        self._append(
            EventKind.STAGE_COMPLETED,
            {
                "stage": "algorithm_design",
                "document": self.design.to_json(),
                "stored_at": entry.created_at,
            },
        )
        self._run_generation()

    def _run_generation(self) -> None:
        backend = self._require_backend()
        assert self.requirements is not None and self.design is not None
        self.phase = Phase.GENERATING
        if self.config.ablation.retrieval:
            hits = retrieve_support(
                self.requirements, self.design, self.kbs, self.config.k_per_kb
            )
        else:
            hits = SupportHits()
        self.context = assemble_context(
            self.requirements, self.design, hits, self.config.ablation
        )
        artifact = generate(self.context, backend, pool=self.pool, config=self.config)
        self.artifacts.append(artifact)
        entry = self.pool.get(ArtifactKind.CODE_DRAFT)
        assert entry is not None
        self._append(
            EventKind.STAGE_COMPLETED,
            {
                "stage": "code_implementation",
                "revision": artifact.revision,
                "source": artifact.source,
                "language": artifact.language,
                "platform": artifact.platform,
                "provenance": artifact.provenance,
                "kb_snippets": list(self.context.kb_snippets),
                "stored_at": entry.created_at,
            },
        )
        self.debug = DebugSession(
            iteration=0,
            max_iterations=self.config.ablation.max_debug_iterations,
            state=DebugState.AWAITING_FEEDBACK,
        )
        if self.config.ablation.feedback:
            self.phase = Phase.AWAITING_FEEDBACK
        else:
            # Feedback mechanism off: single-shot code, straight to comments.
            self.debug = replace(self.debug, state=DebugState.ANNOTATING)
            self.exhausted = False
            self._run_annotation()

    def _run_repair(self, fb: DebugFeedback) -> None:
        backend = self._require_backend()
        assert self.debug is not None and self.context is not None
        artifact = repair(
            self.debug,
            self.artifacts[-1],
            fb,
            self.context,
            backend,
            pool=self.pool,
            config=self.config,
        )
        self.artifacts.append(artifact)
        code_entry = self.pool.get(ArtifactKind.CODE_DRAFT)
        transcript_entry = self.pool.get(ArtifactKind.DEBUG_TRANSCRIPT)
        assert code_entry is not None and transcript_entry is not None
        self._append(
            EventKind.REPAIR_PRODUCED,
            {
                "revision": artifact.revision,
                "source": artifact.source,
                "stored_at": code_entry.created_at,
                "transcript_entry": transcript_entry.payload[-1],
                "transcript_stored_at": transcript_entry.created_at,
            },
        )
        self.debug = replace(self.debug, state=DebugState.AWAITING_FEEDBACK)
        self.phase = Phase.AWAITING_FEEDBACK

    def _run_annotation(self) -> None:
        backend = self._require_backend()
        assert self.debug is not None
        assert self.requirements is not None and self.design is not None
        self.phase = Phase.ANNOTATING
        self.annotated = annotate(
            self.debug,
            self.artifacts[-1],
            self.requirements,
            self.design,
            backend,
            pool=self.pool,
            config=self.config,
            created_at=self.clock.now(),
        )
        entry = self.pool.get(ArtifactKind.ANNOTATED_CODE)
        assert entry is not None
        self._append(
            EventKind.ANNOTATION_PRODUCED,
            {
                "text": self.annotated.text,
                "header": dict(self.annotated.header),
                "exhausted": self.exhausted,
                "stored_at": entry.created_at,
            },
        )
        self.debug = replace(self.debug, state=DebugState.DONE)
        self.phase = Phase.DONE

    # ------------------------------------------------------------------
    # views

    def view(self) -> dict[str, Any]:
        clarification = None
        if self.phase is Phase.CLARIFYING and self.pending_clarification is not None:
            clarification = {
                "missing": list(self.pending_clarification.missing),
                "prompt_text": self.pending_clarification.prompt_text,
            }
        return {
            "session_id": self.id,
            "phase": self.phase.value,
            "clarification": clarification,
            "requirements": self.requirements.to_json() if self.requirements else None,
            "design": self.design.to_json() if self.design else None,
            "code_revisions": [
                {
                    "revision": a.revision,
                    "source": a.source,
                    "provenance": a.provenance,
                }
                for a in self.artifacts
            ],
            "annotated": self.annotated.text if self.annotated else None,
            "exhausted": self.exhausted,
            "failure": dict(self.failure) if self.failure else None,
            "event_count": len(self.events),
        }

    def artifacts_view(self) -> dict[str, Any]:
        view = self.view()
        view["snapshot"] = self.pool.to_jsonable()
        return view

    def snapshot_bytes(self) -> bytes:
        return json.dumps(
            self.pool.to_jsonable(),
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
        ).encode("utf-8")

    def event_log_bytes(self) -> bytes:
        lines = [
            json.dumps(
                e.to_jsonable(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
            )
            for e in self.events
        ]
        return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def replay(events: list[SessionEvent]) -> Session:
    """Reconstruct a session from its event log without backend calls."""
    if not events:
        raise CorruptLog("no TaskCreated event (empty log)")
    for i, event in enumerate(events, start=1):
        if event.seq != i:
            raise CorruptLog(f"sequence gap at {i}", seq=i)
    first = events[0]
    if first.kind is not EventKind.TASK_CREATED:
        raise CorruptLog("no TaskCreated event (log must start with one)")

    session = Session(
        requirement_text=first.payload["requirement_text"],
        config=RunConfig.from_jsonable(first.payload["config"]),
        session_id=first.payload["session_id"],
    )
    session.events = list(events)
    pool = session.pool
    for event in events:
        payload = event.payload
        if event.kind is EventKind.TASK_CREATED:
            continue
        if event.kind is EventKind.CLARIFICATION_ASKED:
            session.raw = RawElements.from_dict(payload["elements"])
            session.flags = ConditionalFlags(
                spatial_needed=payload["flags"]["spatial_needed"],
                temporal_needed=payload["flags"]["temporal_needed"],
            )
            session.clar_round = payload["round"]
            session.pending_clarification = ClarificationRequest(
                missing=list(payload["missing"]),
                prompt_text=payload["prompt_text"],
            )
            session.phase = Phase.CLARIFYING
        elif event.kind is EventKind.ANSWERS_RECEIVED:
            session.raw = merge_answers(session.raw, payload["answers"])
        elif event.kind is EventKind.STAGE_COMPLETED:
            stage = payload["stage"]
            if stage == "requirement_analysis":
                pool.put(
                    ArtifactKind.REQUIREMENTS_DOC,
                    payload["document"],
                    at=payload["stored_at"],
                )
                document = RequirementsDocument.from_json(payload["document"])
                session.requirements = RequirementsDocument(
                    elements=document.elements,
                    provenance=dict(payload.get("provenance", {})),
                )
                session.pending_clarification = None
                session.phase = Phase.DESIGNING
            elif stage == "algorithm_design":
                pool.put(
                    ArtifactKind.ALGORITHM_DESIGN,
                    payload["document"],
                    at=payload["stored_at"],
                )
                session.design = AlgorithmDesignDocument.from_json(payload["document"])
            elif stage == "code_implementation":
                pool.put(
                    ArtifactKind.CODE_DRAFT, payload["source"], at=payload["stored_at"]
                )
                artifact = CodeArtifact(
                    language=payload["language"],
                    platform=payload["platform"],
                    source=payload["source"],
                    revision=payload["revision"],
                    provenance=payload.get("provenance", PROVENANCE_GENERATED),
                )
                session.artifacts.append(artifact)
                assert session.requirements is not None and session.design is not None
                session.context = PromptContext(
                    requirements=session.requirements,
                    design=session.design,
                    kb_snippets=tuple(payload.get("kb_snippets", [])),
                    ablation=session.config.ablation,
                )
                session.debug = DebugSession(
                    iteration=0,
                    max_iterations=session.config.ablation.max_debug_iterations,
                    state=DebugState.AWAITING_FEEDBACK,
                )
                session.phase = Phase.AWAITING_FEEDBACK
            else:
                raise CorruptLog(f"unknown stage {stage!r}", seq=event.seq)
        elif event.kind is EventKind.FEEDBACK_RECEIVED:
            assert session.debug is not None
            fb = DebugFeedback(**payload["feedback"])
            session.debug = next_transition(session.debug, fb)
            session.exhausted = payload["exhausted"]
        elif event.kind is EventKind.REPAIR_PRODUCED:
            pool.put(ArtifactKind.CODE_DRAFT, payload["source"], at=payload["stored_at"])
            existing = pool.get(ArtifactKind.DEBUG_TRANSCRIPT)
            entries = list(existing.payload) if existing else []
            entries.append(payload["transcript_entry"])
            pool.put(
                ArtifactKind.DEBUG_TRANSCRIPT,
                entries,
                at=payload["transcript_stored_at"],
            )
            previous = session.artifacts[-1]
            session.artifacts.append(
                CodeArtifact(
                    language=previous.language,
                    platform=previous.platform,
                    source=payload["source"],
                    revision=payload["revision"],
                    provenance=PROVENANCE_REPAIRED,
                )
            )
            assert session.debug is not None
            session.debug = replace(session.debug, state=DebugState.AWAITING_FEEDBACK)
            session.phase = Phase.AWAITING_FEEDBACK
        elif event.kind is EventKind.ANNOTATION_PRODUCED:
            pool.put(ArtifactKind.ANNOTATED_CODE, payload["text"], at=payload["stored_at"])
            assert session.artifacts, "annotation without code"
            session.annotated = parse_annotated(
                payload["text"], session.artifacts[-1].language
            )
            session.exhausted = payload["exhausted"]
            if session.debug is not None:
                session.debug = replace(session.debug, state=DebugState.DONE)
            session.phase = Phase.DONE
        elif event.kind is EventKind.FAILED:
            session.failure = {
                "error": payload["error"],
                "message": payload["message"],
            }
            session.phase = Phase.FAILED
        else:  # pragma: no cover - enum is closed
            raise CorruptLog(f"unknown event kind {event.kind}", seq=event.seq)
    return session


class SessionStore:
    """Append-only JSON-lines persistence, one file per session."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.jsonl"

    def append(self, session_id: str, event: SessionEvent) -> None:
        line = json.dumps(
            event.to_jsonable(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )
        with self._path(session_id).open("a", encoding="utf-8") as handle:
            handle.write(line + "\n")

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def load_events(self, session_id: str) -> list[SessionEvent]:
        path = self._path(session_id)
        if not path.exists():
            raise CorruptLog(f"no event log for session {session_id}")
        events = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                events.append(SessionEvent.from_jsonable(json.loads(line)))
        return events

    def load(self, session_id: str) -> Session:
        return replay(self.load_events(session_id))

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.jsonl"))


_EXTENSIONS = {"javascript": ".js", "python": ".py", "r": ".R"}


def export_artifacts(session: Session, directory: str | Path) -> list[Path]:
    """Write the session's artifacts as plain files.

    Code goes out as .txt plus a convenience copy with the language's
    own extension; documents as JSON; annotated code as text.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def _write(name: str, content: str) -> None:
        path = directory / name
        path.write_text(content, encoding="utf-8")
        written.append(path)

    if session.requirements is not None:
        _write(
            "requirements.json",
            json.dumps(session.requirements.to_json(), indent=2, ensure_ascii=False),
        )
    if session.design is not None:
        _write(
            "design.json",
            json.dumps(session.design.to_json(), indent=2, ensure_ascii=False),
        )
    for artifact in session.artifacts:
        _write(f"code_rev{artifact.revision}.txt", artifact.source)
    if session.artifacts:
        final = session.artifacts[-1]
        ext = _EXTENSIONS.get(final.language.strip().lower())
        if ext:
            _write(f"code{ext}", final.source)
    if session.annotated is not None:
        _write("annotated.txt", session.annotated.text)
    return written
