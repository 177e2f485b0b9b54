"""Standardized pipeline documents and their validators.

Two document families cross every stage boundary: the user requirements
document (eight named elements, five of them mandatory) and the
algorithm design document (an ordered list of single-function modules).
Both serialize to fixed JSON shapes; the validators here are the single
source of truth for those shapes and are registered in ``SCHEMAS`` so
the pool and the structured-output loop can validate payloads by id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import SchemaViolation

# The eight requirement elements in canonical order. This order drives
# clarification prompts, serialization, and entity-matching denominators.
ELEMENTS: tuple[str, ...] = (
    "platform",
    "programming_language",
    "analysis_goal",
    "spatial_extent",
    "temporal_extent",
    "data_source_and_format",
    "analysis_methodology",
    "output_format",
)

DISPLAY_KEYS: dict[str, str] = {
    "platform": "Platform",
    "programming_language": "Programming_Language",
    "analysis_goal": "Analysis_Goal",
    "spatial_extent": "Spatial_Extent",
    "temporal_extent": "Temporal_Extent",
    "data_source_and_format": "Data_Source_and_Format",
    "analysis_methodology": "Analysis_Methodology",
    "output_format": "Output_Format",
}
INTERNAL_KEYS: dict[str, str] = {v: k for k, v in DISPLAY_KEYS.items()}

REQUIRED_ELEMENTS: tuple[str, ...] = (
    "platform",
    "programming_language",
    "analysis_goal",
    "data_source_and_format",
    "output_format",
)
CONDITIONAL_ELEMENTS: tuple[str, ...] = ("spatial_extent", "temporal_extent")
OPTIONAL_ELEMENTS: tuple[str, ...] = ("analysis_methodology",)

REQUIREMENTS_DOC_TYPE = "User Requirements Document"
DESIGN_DOC_TYPE = "Algorithm Design Document"


@dataclass(frozen=True)
class RequirementsDocument:
    """Finalized user requirements.

    ``elements`` maps canonical element names to non-empty strings;
    conditional elements are present iff their need flag was set.
    ``provenance`` records, per element, whether the value was user
    given or model inferred.
    """

    elements: dict[str, str]
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def platform(self) -> str:
        return self.elements["platform"]

    @property
    def language(self) -> str:
        return self.elements["programming_language"]

    @property
    def analysis_goal(self) -> str:
        return self.elements["analysis_goal"]

    def get(self, element: str) -> str | None:
        return self.elements.get(element)

    def applicable_elements(self) -> list[str]:
        return [e for e in ELEMENTS if e in self.elements]

    def to_json(self) -> dict[str, Any]:
        body = {
            DISPLAY_KEYS[e]: self.elements[e]
            for e in ELEMENTS
            if e in self.elements
        }
        return {"document_type": REQUIREMENTS_DOC_TYPE, "requirements": body}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "RequirementsDocument":
        violations = validate_requirements_doc(data)
        if violations:
            raise SchemaViolation("invalid requirements document", violations)
        body = data["requirements"]
        elements = {
            INTERNAL_KEYS[k]: v.strip() for k, v in body.items() if v and v.strip()
        }
        return cls(elements=elements)


@dataclass(frozen=True)
class AlgorithmModule:
    sequence: int
    name: str
    description: str
    input: str
    output: str
    implementation_details: str

    def to_json(self) -> dict[str, Any]:
        return {
            "Module_Sequence": self.sequence,
            "Module_Name": self.name,
            "Module_Description": self.description,
            "Input": self.input,
            "Output": self.output,
            "Implementation_Details": self.implementation_details,
        }


@dataclass(frozen=True)
class AlgorithmDesignDocument:
    modules: tuple[AlgorithmModule, ...]

    def module_names(self) -> list[str]:
        return [m.name for m in self.modules]

    def to_json(self) -> dict[str, Any]:
        return {
            "Document_Type": DESIGN_DOC_TYPE,
            "Algorithm": [m.to_json() for m in self.modules],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "AlgorithmDesignDocument":
        violations = validate_design_doc(data)
        if violations:
            raise SchemaViolation("invalid design document", violations)
        modules = tuple(
            AlgorithmModule(
                sequence=m["Module_Sequence"],
                name=m["Module_Name"].strip(),
                description=m["Module_Description"].strip(),
                input=m["Input"].strip(),
                output=m["Output"].strip(),
                implementation_details=m["Implementation_Details"].strip(),
            )
            for m in data["Algorithm"]
        )
        return cls(modules=modules)


def _is_blank(value: Any) -> bool:
    return not isinstance(value, str) or not value.strip()


def validate_raw_elements(data: Any) -> list[str]:
    """Lenient extraction-output schema: any subset of the eight keys."""
    if not isinstance(data, dict):
        return ["extraction output must be a JSON object"]
    violations = []
    for key, value in data.items():
        if key not in INTERNAL_KEYS:
            continue  # extra keys are ignored, not errors
        if value is not None and not isinstance(value, str):
            violations.append(f"{key}: value must be a string or null")
    return violations


def validate_requirements_doc(data: Any) -> list[str]:
    if not isinstance(data, dict):
        return ["document must be a JSON object"]
    violations = []
    if data.get("document_type") != REQUIREMENTS_DOC_TYPE:
        violations.append(
            f'document_type: expected "{REQUIREMENTS_DOC_TYPE}"'
        )
    body = data.get("requirements")
    if not isinstance(body, dict):
        violations.append("requirements: missing or not an object")
        return violations
    for element in REQUIRED_ELEMENTS:
        key = DISPLAY_KEYS[element]
        if key not in body:
            violations.append(f"requirements.{key}: required element missing")
        elif _is_blank(body[key]):
            violations.append(f"requirements.{key}: required element is empty")
    for key, value in body.items():
        if key not in INTERNAL_KEYS:
            violations.append(f"requirements.{key}: unknown element")
        elif key in body and value is not None and not isinstance(value, str):
            violations.append(f"requirements.{key}: value must be a string")
    return violations


def validate_design_shape(data: Any) -> list[str]:
    """Parse-level shape only; rule violations are the design stage's
    own error channel, not grounds for a re-ask."""
    if not isinstance(data, dict):
        return ["document must be a JSON object"]
    violations = []
    if data.get("Document_Type") != DESIGN_DOC_TYPE:
        violations.append(f'Document_Type: expected "{DESIGN_DOC_TYPE}"')
    modules = data.get("Algorithm")
    if not isinstance(modules, list):
        violations.append("Algorithm: missing or not an array")
    elif any(not isinstance(m, dict) for m in modules):
        violations.append("Algorithm: every module must be an object")
    return violations


def validate_design_doc(data: Any, max_modules: int = 20) -> list[str]:
    if not isinstance(data, dict):
        return ["document must be a JSON object"]
    violations = []
    if data.get("Document_Type") != DESIGN_DOC_TYPE:
        violations.append(f'Document_Type: expected "{DESIGN_DOC_TYPE}"')
    modules = data.get("Algorithm")
    if not isinstance(modules, list):
        violations.append("Algorithm: missing or not an array")
        return violations
    if not modules:
        violations.append("empty design: module count must be >= 1")
    if len(modules) > max_modules:
        violations.append(f"module count > {max_modules}")
    text_fields = (
        "Module_Name",
        "Module_Description",
        "Input",
        "Output",
        "Implementation_Details",
    )
    sequences = []
    for idx, module in enumerate(modules, start=1):
        if not isinstance(module, dict):
            violations.append(f"module {idx}: not an object")
            continue
        seq = module.get("Module_Sequence")
        if not isinstance(seq, int) or isinstance(seq, bool) or seq < 1:
            violations.append(f"module {idx}: Module_Sequence must be a positive integer")
        else:
            sequences.append(seq)
        for fname in text_fields:
            if fname not in module:
                violations.append(f"module {idx}: missing {fname}")
            elif _is_blank(module[fname]):
                violations.append(f"module {idx}: empty {fname}")
    if modules and len(sequences) == len(modules):
        if sequences != list(range(1, len(modules) + 1)):
            violations.append(
                "non-consecutive sequence: Module_Sequence values must be exactly 1..N"
            )
    return violations


# Schema registry used by the structured-output re-ask loop.
SCHEMAS: dict[str, Callable[[Any], list[str]]] = {
    "raw-elements": validate_raw_elements,
    "requirements-doc": validate_requirements_doc,
    "algorithm-design": validate_design_shape,
}
