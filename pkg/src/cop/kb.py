"""Knowledge bases: load, validate, index, and search the three JSON
corpora (platform/toolkit, function syntax, built-in dataset) that feed
syntax and dataset knowledge into code generation.

Retrieval is lexical BM25 (k1=1.2, b=0.75) over lowercased tokens split
on non-alphanumerics and camelCase boundaries, with deterministic
tie-breaking by record id. Indexes are immutable after load and safe to
share across sessions.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from .errors import DuplicateId, ParseError, SchemaViolation

BM25_K1 = 1.2
BM25_B = 0.75

KB_KINDS = ("platform", "function", "dataset")

# JSON field name -> attribute, per kind. Listed order is the record's
# serialization order. (field, attr, required_non_empty)
_PLATFORM_FIELDS = [
    ("Platform_id", "platform_id", True),
    ("Name", "name", True),
    ("Description", "description", False),
    ("Platform_type", "platform_type", False),
    ("Task_suitability", "task_suitability", False),
    ("Data_source_interfaces", "data_source_interfaces", False),
    ("Access_permissions", "access_permissions", False),
    ("Technical_support", "technical_support", False),
    ("Cross_platform_compatibility", "cross_platform_compatibility", False),
]
_FUNCTION_FIELDS = [
    ("Operator_id", "operator_id", True),
    ("Full_name", "full_name", True),
    ("Short_name", "short_name", True),
    ("Library_name", "library_name", False),
    ("Language", "language", True),
    ("Platform", "platform", True),
    ("Description", "description", False),
    ("Usage", "usage", False),
    ("Parameters", "parameters", False),
    ("Output_type", "output_type", False),
]
_DATASET_FIELDS = [
    ("Dataset_id", "dataset_id", True),
    ("Name", "name", True),
    ("Provider", "provider", False),
    ("Snippet", "snippet", True),
    ("Tags", "tags", False),
    ("Description", "description", False),
    ("DOI", "doi", False),
    ("Website", "website", False),
]

_FIELDS_BY_KIND = {
    "platform": _PLATFORM_FIELDS,
    "function": _FUNCTION_FIELDS,
    "dataset": _DATASET_FIELDS,
}

_ID_ATTR = {"platform": "platform_id", "function": "operator_id", "dataset": "dataset_id"}

# Which attributes contribute to the indexed text, per kind.
_INDEX_ATTRS = {
    "platform": ("name", "description"),
    "function": ("full_name", "short_name", "description", "usage"),
    "dataset": ("name", "description", "tags"),
}


@dataclass(frozen=True)
class PlatformRecord:
    platform_id: str
    name: str
    description: str = ""
    platform_type: str = ""
    task_suitability: str = ""
    data_source_interfaces: str = ""
    access_permissions: str = ""
    technical_support: str = ""
    cross_platform_compatibility: str = ""


@dataclass(frozen=True)
class FunctionRecord:
    operator_id: str
    full_name: str
    short_name: str
    language: str
    platform: str
    library_name: str = ""
    description: str = ""
    usage: str = ""
    parameters: str = ""
    output_type: str = ""


@dataclass(frozen=True)
class DatasetRecord:
    dataset_id: str
    name: str
    snippet: str
    provider: str = ""
    tags: tuple[str, ...] = ()
    description: str = ""
    doi: str = ""
    website: str = ""


_RECORD_TYPES = {
    "platform": PlatformRecord,
    "function": FunctionRecord,
    "dataset": DatasetRecord,
}

_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")
_SPLIT_RE = re.compile(r"[^0-9A-Za-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercased tokens split on non-alphanumerics and camelCase.

    ``normalizedDifference`` -> ``["normalized", "difference"]`` so
    platform operator names match their prose mentions.
    """
    tokens: list[str] = []
    for chunk in _SPLIT_RE.split(text):
        if not chunk:
            continue
        for part in _CAMEL_RE.findall(chunk):
            tokens.append(part.lower())
    return tokens


@dataclass(frozen=True)
class RetrievalHit:
    record_id: str
    score: float
    kb_kind: str
    snippet: str

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "score": self.score,
            "kb_kind": self.kb_kind,
            "snippet": self.snippet,
        }


def render_snippet(kind: str, record: Any) -> str:
    """Fixed labeled block per record, injected verbatim into prompts."""
    if kind == "platform":
        return (
            f"PLATFORM {record.name} | type={record.platform_type}"
            f" | suitability: {record.task_suitability}"
        )
    if kind == "function":
        return (
            f"FUNCTION {record.full_name} | platform={record.platform}"
            f" | usage: {record.usage}"
        )
    if kind == "dataset":
        tags = ", ".join(record.tags)
        return f"DATASET {record.name} | path={record.snippet} | tags: {tags}"
    raise ValueError(f"unknown kb kind: {kind!r}")


class KbIndex:
    """Immutable inverted index over one knowledge base."""

    def __init__(self, kind: str, records: Iterable[Any]):
        if kind not in KB_KINDS:
            raise ValueError(f"unknown kb kind: {kind!r}")
        self.kind = kind
        id_attr = _ID_ATTR[kind]
        self._records: dict[str, Any] = {}
        self._doc_lengths: dict[str, int] = {}
        self._postings: dict[str, dict[str, int]] = {}
        for record in records:
            record_id = getattr(record, id_attr)
            if record_id in self._records:
                raise DuplicateId(record_id)
            self._records[record_id] = record
            counts = Counter(tokenize(self._index_text(record)))
            self._doc_lengths[record_id] = sum(counts.values())
            for term, freq in counts.items():
                self._postings.setdefault(term, {})[record_id] = freq
        total = sum(self._doc_lengths.values())
        self._avg_doc_length = total / len(self._records) if self._records else 0.0

    def _index_text(self, record: Any) -> str:
        parts = []
        for attr in _INDEX_ATTRS[self.kind]:
            value = getattr(record, attr)
            if isinstance(value, tuple):
                parts.extend(value)
            elif value:
                parts.append(value)
        return " ".join(parts)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def record_ids(self) -> list[str]:
        return list(self._records)

    def get_by_id(self, record_id: str) -> Any | None:
        return self._records.get(record_id)

    def _passes_filters(self, record: Any, filters: dict[str, str] | None) -> bool:
        # A filter only rejects records that carry the field with a
        # different value; kinds without the field are unconstrained.
        if not filters:
            return True
        for name, wanted in filters.items():
            if wanted is None:
                continue
            value = getattr(record, name, None)
            if value is not None and value.casefold() != wanted.casefold():
                return False
        return True

    def search(
        self,
        query: str,
        filters: dict[str, str] | None = None,
        k: int = 5,
    ) -> list[RetrievalHit]:
        """BM25 top-k over records passing the platform/language filters.

        Ties break by record id ascending; an empty query returns no
        hits; fewer than k are returned when fewer match.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        tokens = tokenize(query)
        if not tokens:
            return []
        n_docs = len(self._records)
        scores: dict[str, float] = {}
        for term in tokens:
            postings = self._postings.get(term)
            if not postings:
                continue
            df = len(postings)
            idf = math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)
            for record_id, tf in postings.items():
                dl = self._doc_lengths[record_id]
                norm = BM25_K1 * (1.0 - BM25_B + BM25_B * dl / self._avg_doc_length)
                contribution = idf * (tf * (BM25_K1 + 1.0)) / (tf + norm)
                scores[record_id] = scores.get(record_id, 0.0) + contribution
        candidates = [
            (record_id, score)
            for record_id, score in scores.items()
            if self._passes_filters(self._records[record_id], filters)
        ]
        candidates.sort(key=lambda pair: (-pair[1], pair[0]))
        return [
            RetrievalHit(
                record_id=record_id,
                score=score,
                kb_kind=self.kind,
                snippet=render_snippet(self.kind, self._records[record_id]),
            )
            for record_id, score in candidates[:k]
        ]


def _parse_record(kind: str, index: int, raw: Any) -> Any:
    if not isinstance(raw, dict):
        raise SchemaViolation(f"record {index}: not a JSON object")
    kwargs: dict[str, Any] = {}
    for field_name, attr, required in _FIELDS_BY_KIND[kind]:
        if field_name not in raw:
            raise SchemaViolation(f"record {index}: missing field {field_name}")
        value = raw[field_name]
        if attr == "tags":
            if not isinstance(value, list) or any(
                not isinstance(t, str) for t in value
            ):
                raise SchemaViolation(
                    f"record {index}: Tags must be a list of strings"
                )
            kwargs[attr] = tuple(value)
            continue
        if not isinstance(value, str):
            raise SchemaViolation(
                f"record {index}: field {field_name} must be a string"
            )
        if required and not value.strip():
            raise SchemaViolation(
                f"record {index}: field {field_name} must be non-empty"
            )
        kwargs[attr] = value
    return _RECORD_TYPES[kind](**kwargs)


def load_kb(path: str | Path, kind: str) -> KbIndex:
    """Load one KB file (UTF-8 JSON array of records) into an index."""
    if kind not in KB_KINDS:
        raise ValueError(f"unknown kb kind: {kind!r}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ParseError(f"{path}: expected a JSON array of records")
    records = [_parse_record(kind, i, raw) for i, raw in enumerate(data)]
    return KbIndex(kind, records)


@dataclass
class KbCatalog:
    """The up-to-three loaded indexes a session searches."""

    platform: KbIndex | None = None
    function: KbIndex | None = None
    dataset: KbIndex | None = None

    def get(self, kind: str) -> KbIndex | None:
        return getattr(self, kind, None)
