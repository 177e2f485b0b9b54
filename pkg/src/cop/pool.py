"""Shared information pool: explicit short-term memory for one task.

Each pipeline stage deposits exactly one standardized artifact here and
later stages read it back. The pool keeps the latest entry per artifact
kind, plus the full revision history for code drafts (debug diffs need
it), and is wiped between tasks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

from .clock import Clock, SystemClock
from .documents import validate_design_doc, validate_requirements_doc
from .errors import SchemaViolation


class ArtifactKind(str, Enum):
    """The five artifact kinds, in their fixed snapshot order."""

    REQUIREMENTS_DOC = "RequirementsDoc"
    ALGORITHM_DESIGN = "AlgorithmDesign"
    CODE_DRAFT = "CodeDraft"
    DEBUG_TRANSCRIPT = "DebugTranscript"
    ANNOTATED_CODE = "AnnotatedCode"


KIND_ORDER: tuple[ArtifactKind, ...] = tuple(ArtifactKind)


def _require_text(payload: Any) -> list[str]:
    if not isinstance(payload, str):
        return ["payload must be text"]
    return []


def _require_transcript(payload: Any) -> list[str]:
    if not isinstance(payload, list) or any(
        not isinstance(item, dict) for item in payload
    ):
        return ["payload must be a list of transcript entries"]
    return []


# Central payload schema registry: a put() with the wrong shape fails
# fast instead of poisoning downstream stages.
PAYLOAD_SCHEMAS: dict[ArtifactKind, Callable[[Any], list[str]]] = {
    ArtifactKind.REQUIREMENTS_DOC: validate_requirements_doc,
    ArtifactKind.ALGORITHM_DESIGN: validate_design_doc,
    ArtifactKind.CODE_DRAFT: _require_text,
    ArtifactKind.DEBUG_TRANSCRIPT: _require_transcript,
    ArtifactKind.ANNOTATED_CODE: _require_text,
}


@dataclass(frozen=True)
class PoolEntry:
    kind: ArtifactKind
    payload: Any
    revision: int
    created_at: str

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "revision": self.revision,
            "created_at": self.created_at,
            "payload": self.payload,
        }


class InfoPool:
    """One pool per session, mutated by one request at a time."""

    def __init__(self, clock: Clock | None = None):
        self._clock: Clock = clock or SystemClock()
        self._current: dict[ArtifactKind, PoolEntry] = {}
        self._code_history: list[PoolEntry] = []

    def put(self, kind: ArtifactKind, payload: Any, *, at: str | None = None) -> PoolEntry:
        """Store ``payload`` as the current entry for ``kind``.

        Code drafts get revision previous+1 (0 if none); other kinds
        overwrite at revision 0. ``at`` pins the timestamp (used by
        replay); otherwise the injected clock supplies it.
        """
        violations = PAYLOAD_SCHEMAS[kind](payload)
        if violations:
            raise SchemaViolation(
                f"payload for {kind.value} failed schema: {violations[0]}",
                violations,
            )
        if kind is ArtifactKind.CODE_DRAFT:
            revision = self._code_history[-1].revision + 1 if self._code_history else 0
        else:
            revision = 0
        entry = PoolEntry(
            kind=kind,
            payload=payload,
            revision=revision,
            created_at=at if at is not None else self._clock.now(),
        )
        self._current[kind] = entry
        if kind is ArtifactKind.CODE_DRAFT:
            self._code_history.append(entry)
        return entry

    def get(self, kind: ArtifactKind) -> PoolEntry | None:
        return self._current.get(kind)

    def clear(self) -> None:
        self._current.clear()
        self._code_history.clear()

    def code_revisions(self) -> list[PoolEntry]:
        return list(self._code_history)

    def snapshot(self) -> list[PoolEntry]:
        """Current entries in fixed kind order; code drafts expanded to
        their full ascending revision history."""
        entries: list[PoolEntry] = []
        for kind in KIND_ORDER:
            if kind is ArtifactKind.CODE_DRAFT:
                entries.extend(self._code_history)
            elif kind in self._current:
                entries.append(self._current[kind])
        return entries

    def to_jsonable(self) -> list[dict[str, Any]]:
        return [entry.to_jsonable() for entry in self.snapshot()]
