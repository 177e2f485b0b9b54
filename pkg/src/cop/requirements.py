"""Stage 1: requirement analysis.

Extracts the eight key elements from free-text requirements, applies
the required/conditional/optional completeness rules, drives the
clarification loop, and emits the standardized requirements document
into the pool.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace, fields as dataclass_fields
from enum import Enum
from typing import Mapping

from .backend import ChatBackend, ChatMessage, CompletionRequest, complete_json
from .config import RunConfig
from .documents import (
    CONDITIONAL_ELEMENTS,
    DISPLAY_KEYS,
    ELEMENTS,
    INTERNAL_KEYS,
    RequirementsDocument,
)
from .errors import (
    EmptyAnswer,
    IncompleteRequirements,
    NothingMissing,
    StructuredOutputFailure,
    UnknownElement,
)
from .pool import ArtifactKind, InfoPool
from . import prompts

PROVENANCE_GIVEN = "given"
PROVENANCE_INFERRED = "inferred"


@dataclass(frozen=True)
class RawElements:
    """What the extractor found; absent means not yet known."""

    platform: str | None = None
    programming_language: str | None = None
    analysis_goal: str | None = None
    spatial_extent: str | None = None
    temporal_extent: str | None = None
    data_source_and_format: str | None = None
    analysis_methodology: str | None = None
    output_format: str | None = None

    def get(self, element: str) -> str | None:
        if element not in ELEMENTS:
            raise UnknownElement(f"unknown element: {element!r}")
        return getattr(self, element)

    def present(self) -> list[str]:
        return [e for e in ELEMENTS if self.get(e) is not None]

    def as_dict(self) -> dict[str, str]:
        return {e: v for e in ELEMENTS if (v := self.get(e)) is not None}

    @classmethod
    def from_dict(cls, values: Mapping[str, str | None]) -> "RawElements":
        known = {f.name for f in dataclass_fields(cls)}
        cleaned = {}
        for key, value in values.items():
            if key not in known:
                raise UnknownElement(f"unknown element: {key!r}")
            if value is not None and value.strip():
                cleaned[key] = value.strip()
        return cls(**cleaned)


@dataclass(frozen=True)
class ConditionalFlags:
    spatial_needed: bool
    temporal_needed: bool


class ElementStatus(str, Enum):
    PRESENT = "Present"
    MISSING = "Missing"
    INFERRED = "Inferred"
    NOT_APPLICABLE = "NotApplicable"


@dataclass(frozen=True)
class CompletenessReport:
    statuses: dict[str, ElementStatus]
    overall: str  # Complete | NeedsClarification

    def missing(self) -> list[str]:
        return [e for e in ELEMENTS if self.statuses[e] is ElementStatus.MISSING]


@dataclass(frozen=True)
class ClarificationRequest:
    missing: list[str]
    prompt_text: str


def extract_elements(
    user_text: str,
    backend: ChatBackend,
    config: RunConfig | None = None,
) -> RawElements:
    """One backend call with the extraction template, schema-checked."""
    if not user_text.strip():
        raise ValueError("user_text must be non-empty")
    config = config or RunConfig()
    request = CompletionRequest(
        messages=(
            ChatMessage("system", prompts.EXTRACTION_SYSTEM),
            ChatMessage("user", prompts.extraction_user(user_text)),
        ),
        stage_tag="requirement_analysis",
        temperature=config.temperature_structured,
        max_tokens=config.max_tokens,
    )
    result = complete_json(backend, request, "raw-elements", config.max_reasks)
    values: dict[str, str | None] = {}
    for display_key, value in result.document.items():
        internal = INTERNAL_KEYS.get(display_key)
        if internal is not None:
            values[internal] = value
    return RawElements.from_dict(values)


# Heuristic evidence that a task has a geographic or temporal dimension.
_SPATIAL_NOUNS = {
    "area", "areas", "region", "regions", "city", "cities", "province",
    "provinces", "country", "countries", "watershed", "basin", "boundary",
    "boundaries", "map", "maps", "zone", "zones", "county", "extent",
}
_MONTHS = {
    "january", "february", "march", "april", "may", "june", "july",
    "august", "september", "october", "november", "december",
}
_TEMPORAL_WORDS = {
    "annual", "yearly", "monthly", "daily", "weekly", "seasonal",
    "trend", "trends", "period", "timeseries",
}
_YEAR_RE = re.compile(r"\b(?:1[89]\d{2}|20\d{2})\b")
_PLACE_RE = re.compile(
    r"\b(?:in|for|of|to|around|across|within|over)\s+(?:the\s+)?([A-Z][A-Za-z]+)"
)
_NOT_PLACES = _MONTHS | {
    "geotiff", "csv", "shapefile", "html", "json", "pdf", "geojson",
}
_YESNO_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


def _table_spatial(goal: str) -> bool:
    words = {w.lower() for w in re.findall(r"[A-Za-z]+", goal)}
    if words & _SPATIAL_NOUNS:
        return True
    for match in _PLACE_RE.finditer(goal):
        if match.group(1).lower() not in _NOT_PLACES:
            return True
    return False


def _table_temporal(goal: str) -> bool:
    if _YEAR_RE.search(goal):
        return True
    words = {w.lower() for w in re.findall(r"[A-Za-z]+", goal)}
    if words & _MONTHS or words & _TEMPORAL_WORDS:
        return True
    return "time series" in goal.lower()


def classify_conditional_need(
    analysis_goal: str,
    backend: ChatBackend | None = None,
    config: RunConfig | None = None,
) -> ConditionalFlags:
    """Keyword rule table first; one backend yes/no query only when the
    table finds no evidence either way."""
    if not analysis_goal.strip():
        raise ValueError("analysis_goal must be non-empty")
    spatial = _table_spatial(analysis_goal)
    temporal = _table_temporal(analysis_goal)
    if spatial or temporal:
        return ConditionalFlags(spatial_needed=spatial, temporal_needed=temporal)
    if backend is None:
        # No evidence and nothing to ask: treat both as not needed.
        return ConditionalFlags(spatial_needed=False, temporal_needed=False)
    config = config or RunConfig()
    request = CompletionRequest(
        messages=(
            ChatMessage("system", prompts.CONDITIONAL_SYSTEM),
            ChatMessage("user", prompts.conditional_user(analysis_goal)),
        ),
        stage_tag="requirement_analysis",
        temperature=config.temperature_structured,
        max_tokens=64,
    )
    answer = backend.complete(request)
    tokens = _YESNO_RE.findall(answer)
    if len(tokens) < 2:
        raise StructuredOutputFailure(
            f"unparseable spatial/temporal answer: {answer[:80]!r}"
        )
    return ConditionalFlags(
        spatial_needed=tokens[0].lower() == "yes",
        temporal_needed=tokens[1].lower() == "yes",
    )


def effective_flags(raw: RawElements, flags: ConditionalFlags) -> ConditionalFlags:
    """User-provided conditionals always count as needed."""
    return ConditionalFlags(
        spatial_needed=flags.spatial_needed or raw.spatial_extent is not None,
        temporal_needed=flags.temporal_needed or raw.temporal_extent is not None,
    )


def check_completeness(raw: RawElements, flags: ConditionalFlags) -> CompletenessReport:
    """Pure rule application; methodology never blocks completion."""
    statuses: dict[str, ElementStatus] = {}
    needed = {
        "spatial_extent": flags.spatial_needed,
        "temporal_extent": flags.temporal_needed,
    }
    for element in ELEMENTS:
        value = raw.get(element)
        if element in CONDITIONAL_ELEMENTS:
            if not needed[element]:
                statuses[element] = ElementStatus.NOT_APPLICABLE
            elif value is None:
                statuses[element] = ElementStatus.MISSING
            else:
                statuses[element] = ElementStatus.PRESENT
        elif element == "analysis_methodology":
            statuses[element] = (
                ElementStatus.PRESENT if value is not None else ElementStatus.INFERRED
            )
        else:
            statuses[element] = (
                ElementStatus.PRESENT if value is not None else ElementStatus.MISSING
            )
    overall = (
        "Complete"
        if all(s is not ElementStatus.MISSING for s in statuses.values())
        else "NeedsClarification"
    )
    return CompletenessReport(statuses=statuses, overall=overall)


def build_clarification(report: CompletenessReport) -> ClarificationRequest:
    """Console-shaped prompt listing the missing elements in canonical order."""
    missing = report.missing()
    if report.overall == "Complete" or not missing:
        raise NothingMissing("no elements are missing")
    lines = [f"{DISPLAY_KEYS[e]}:" for e in missing]
    prompt_text = (
        "Based on your input, the following information is still needed:\n"
        + "\n".join(lines)
    )
    return ClarificationRequest(missing=missing, prompt_text=prompt_text)


def merge_answers(raw: RawElements, answers: Mapping[str, str]) -> RawElements:
    """Fill or overwrite elements with clarification answers."""
    updates: dict[str, str] = {}
    for key, value in answers.items():
        if key not in ELEMENTS:
            raise UnknownElement(f"unknown element: {key!r}")
        if not isinstance(value, str) or not value.strip():
            raise EmptyAnswer(f"empty answer for {key!r}")
        updates[key] = value.strip()
    return replace(raw, **updates)


def finalize(
    raw: RawElements,
    flags: ConditionalFlags,
    backend: ChatBackend,
    pool: InfoPool | None = None,
    config: RunConfig | None = None,
) -> RequirementsDocument:
    """Build the standardized document once the completeness check passes.

    Methodology is inferred with one backend call when absent and marked
    inferred in provenance; conditionals are included only when needed.
    """
    config = config or RunConfig()
    report = check_completeness(raw, flags)
    if report.overall != "Complete":
        raise IncompleteRequirements(
            "cannot finalize: missing " + ", ".join(report.missing())
        )
    elements: dict[str, str] = {}
    provenance: dict[str, str] = {}
    needed = {
        "spatial_extent": flags.spatial_needed,
        "temporal_extent": flags.temporal_needed,
    }
    for element in ELEMENTS:
        value = raw.get(element)
        if element in CONDITIONAL_ELEMENTS:
            if needed[element] and value is not None:
                elements[element] = value
                provenance[element] = PROVENANCE_GIVEN
            continue
        if element == "analysis_methodology" and value is None:
            request = CompletionRequest(
                messages=(
                    ChatMessage("system", prompts.METHODOLOGY_SYSTEM),
                    ChatMessage(
                        "user", prompts.methodology_user(raw.analysis_goal or "")
                    ),
                ),
                stage_tag="requirement_analysis",
                temperature=config.temperature_structured,
                max_tokens=128,
            )
            inferred = backend.complete(request).strip()
            if not inferred:
                raise StructuredOutputFailure("empty methodology inference")
            elements[element] = inferred
            provenance[element] = PROVENANCE_INFERRED
            continue
        assert value is not None  # guaranteed by the completeness check
        elements[element] = value
        provenance[element] = PROVENANCE_GIVEN
    document = RequirementsDocument(elements=elements, provenance=provenance)
    if pool is not None:
        pool.put(ArtifactKind.REQUIREMENTS_DOC, document.to_json())
    return document
