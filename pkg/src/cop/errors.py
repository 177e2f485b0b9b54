"""Exception taxonomy shared by every pipeline stage and service layer."""

from __future__ import annotations


class CopError(Exception):
    """Base class for all errors raised by this package."""


class SchemaViolation(CopError):
    """A payload failed validation against its registered schema."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or [message]


class ParseError(CopError):
    """Input bytes could not be parsed at all (bad JSON, bad file)."""


class DuplicateId(CopError):
    """Two records in one knowledge-base file share an id."""

    def __init__(self, record_id: str):
        super().__init__(f"duplicate record id: {record_id!r}")
        self.record_id = record_id


class NoScriptedRule(CopError):
    """Scripted backend had no rule matching the request; tests fail loudly."""


class TransportError(CopError):
    """HTTP backend failed after retries (timeout, connect, 5xx)."""


class ProviderRefusal(CopError):
    """Backend returned empty content."""


class StructuredOutputFailure(CopError):
    """Model never produced a schema-valid document within the re-ask budget.

    ``attempts`` carries one violation list per failed attempt.
    """

    def __init__(self, message: str, attempts: list[list[str]] | None = None):
        super().__init__(message)
        self.attempts = attempts or []


class NothingMissing(CopError):
    """Clarification requested for a report that has no missing elements."""


class UnknownElement(CopError):
    """An answer key is not one of the eight requirement elements."""


class EmptyAnswer(CopError):
    """A clarification answer was empty or whitespace."""


class IncompleteRequirements(CopError):
    """finalize() called before the completeness check passed."""


class DesignInvalid(CopError):
    """Algorithm design document violates its structural invariants."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or [message]


class MissingArtifact(CopError):
    """A required pool entry is absent and nothing was passed directly."""


class EmptyCode(CopError):
    """Model response reduced to whitespace where code was expected."""


class InvalidFeedback(CopError):
    """Debug feedback violates its structural invariants."""


class WrongState(CopError):
    """Debug-loop operation invoked in a state that does not allow it."""


class AnnotationInvalid(CopError):
    """Annotated code still violates the comment rules after the re-ask."""

    def __init__(self, message: str, violations: list[str] | None = None):
        super().__init__(message)
        self.violations = violations or [message]


class UnknownLanguage(CopError):
    """No comment token registered for the requested language."""


class EmptyVerdicts(CopError):
    """A metric was asked to score an empty verdict list."""


class OutOfRange(CopError):
    """An expert score fell outside 1..10."""


class IoFailure(CopError):
    """Report emission failed at the filesystem level."""


class WrongPhase(CopError):
    """Session request arrived in a phase that does not accept it."""


class ClarificationExhausted(CopError):
    """The clarification loop hit its round cap without completing."""


class UnknownSession(CopError):
    """No session with the requested id."""


class CorruptLog(CopError):
    """Event log violates its invariants (gap, missing TaskCreated)."""

    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message)
        self.seq = seq


class BackendUnavailable(CopError):
    """No chat backend is configured for this service."""
