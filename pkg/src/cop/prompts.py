"""Prompt catalog: one system template per stage plus the user-message
builders that render pool artifacts into them.

Section labels below are load-bearing: tests assert on them to verify
what each stage was shown under the mechanism toggles.
"""

from __future__ import annotations

import json
from typing import Any

from .documents import (
    CONDITIONAL_ELEMENTS,
    DISPLAY_KEYS,
    ELEMENTS,
    OPTIONAL_ELEMENTS,
    REQUIRED_ELEMENTS,
)

REQUIREMENTS_SECTION = "User Requirements Document:"
DESIGN_SECTION = "Algorithm Design Document:"
CODE_SECTION = "Current code:"
KB_SECTION = "Reference snippets:"
FEEDBACK_SECTION = "Execution feedback:"


def _doc_json(document: dict[str, Any]) -> str:
    return json.dumps(document, indent=2, ensure_ascii=False)


EXTRACTION_SYSTEM = (
    "You are the requirement-analysis stage of a geospatial scripting "
    "assistant. Read the user's request and pull out these eight elements, "
    "keeping the user's own wording wherever possible:\n"
    + "\n".join(f"- {DISPLAY_KEYS[e]}" for e in ELEMENTS)
    + "\n\nRequired elements: "
    + ", ".join(DISPLAY_KEYS[e] for e in REQUIRED_ELEMENTS)
    + ". Conditional elements (include only when the task needs them): "
    + ", ".join(DISPLAY_KEYS[e] for e in CONDITIONAL_ELEMENTS)
    + ". Optional element (may be inferred later): "
    + ", ".join(DISPLAY_KEYS[e] for e in OPTIONAL_ELEMENTS)
    + ".\n\nRespond with a single JSON object whose keys are the element "
    "names above. Include a key only when the request actually states that "
    "element; leave unstated elements out entirely. Do not invent values."
)


def extraction_user(user_text: str) -> str:
    return f"User request:\n{user_text}"


CONDITIONAL_SYSTEM = (
    "You decide whether a geospatial task needs an explicit spatial extent "
    "and whether it needs an explicit temporal extent. Answer in exactly "
    "this form: spatial=yes|no temporal=yes|no"
)


def conditional_user(analysis_goal: str) -> str:
    return (
        f"Task goal:\n{analysis_goal}\n\n"
        "Does this task need a spatial extent? Does it need a temporal extent?"
    )


METHODOLOGY_SYSTEM = (
    "You name the analysis methodology implied by a geospatial task goal. "
    "Respond with a short noun phrase only, no explanation."
)


def methodology_user(analysis_goal: str) -> str:
    return f"Task goal:\n{analysis_goal}\n\nMethodology:"


DESIGN_SYSTEM = (
    "You are the algorithm-design stage of a geospatial scripting "
    "assistant. Split the task described by the requirements document into "
    "an ordered list of modules. Each module must do a single thing, have "
    "a clear input and output, and compose with its neighbours.\n\n"
    "Respond with a single JSON object of this shape:\n"
    "{\n"
    '  "Document_Type": "Algorithm Design Document",\n'
    '  "Algorithm": [\n'
    "    {\n"
    '      "Module_Sequence": 1,\n'
    '      "Module_Name": "...",\n'
    '      "Module_Description": "...",\n'
    '      "Input": "...",\n'
    '      "Output": "...",\n'
    '      "Implementation_Details": "..."\n'
    "    }\n"
    "  ]\n"
    "}\n"
    "Module_Sequence values must run 1..N with no gaps and every field "
    "must be non-empty."
)


def design_user(requirements_json: dict[str, Any]) -> str:
    return (
        f"{REQUIREMENTS_SECTION}\n{_doc_json(requirements_json)}\n\n"
        "Produce the algorithm design document."
    )


CODE_SYSTEM = (
    "You are the code-implementation stage of a geospatial scripting "
    "assistant. Write a complete, runnable script in the requested "
    "language for the requested platform, following the module plan in "
    "order. Use the reference snippets for exact function names and "
    "dataset access paths when they are given. Respond with code only."
)


def code_user(
    requirements_json: dict[str, Any] | None,
    design_json: dict[str, Any],
    kb_snippets: list[str],
) -> str:
    parts = []
    if requirements_json is not None:
        parts.append(f"{REQUIREMENTS_SECTION}\n{_doc_json(requirements_json)}")
    parts.append(f"{DESIGN_SECTION}\n{_doc_json(design_json)}")
    if kb_snippets:
        parts.append(KB_SECTION + "\n" + "\n".join(kb_snippets))
    parts.append("Write the script now.")
    return "\n\n".join(parts)


DEBUG_SYSTEM = (
    "You are the code-debugging stage of a geospatial scripting assistant. "
    "The user ran the script and it failed or produced the wrong result. "
    "Return the full corrected script, not a diff. Respond with code only."
)


def debug_user(
    requirements_json: dict[str, Any] | None,
    design_json: dict[str, Any] | None,
    code: str,
    feedback_text: str,
) -> str:
    parts = []
    if requirements_json is not None:
        parts.append(f"{REQUIREMENTS_SECTION}\n{_doc_json(requirements_json)}")
    if design_json is not None:
        parts.append(f"{DESIGN_SECTION}\n{_doc_json(design_json)}")
    parts.append(f"{CODE_SECTION}\n{code}")
    parts.append(f"{FEEDBACK_SECTION}\n{feedback_text}")
    parts.append("Return the corrected script.")
    return "\n\n".join(parts)


ANNOTATION_SYSTEM = (
    "You are the code-annotation stage of a geospatial scripting "
    "assistant. Add comments to the final script without changing any "
    "executable line. Start the file with a comment header of exactly "
    "three lines labeled Created, Platform, and Summary (creation time, "
    "target platform, one-line description). Then add at least one "
    "comment per design module, using the comment token of the script's "
    "language. Respond with the annotated script only."
)


def annotation_user(
    requirements_json: dict[str, Any] | None,
    design_json: dict[str, Any] | None,
    code: str,
    created_at: str,
    platform: str,
    comment_token: str,
) -> str:
    parts = []
    if requirements_json is not None:
        parts.append(f"{REQUIREMENTS_SECTION}\n{_doc_json(requirements_json)}")
    if design_json is not None:
        parts.append(f"{DESIGN_SECTION}\n{_doc_json(design_json)}")
    parts.append(f"{CODE_SECTION}\n{code}")
    parts.append(
        "Header values to use:\n"
        f"{comment_token} Created: {created_at}\n"
        f"{comment_token} Platform: {platform}\n"
        f"{comment_token} Summary: <one line>"
    )
    parts.append("Return the annotated script.")
    return "\n\n".join(parts)
