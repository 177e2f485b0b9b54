"""Scripted-run builders: canned backend rules and feedback drivers
derived from a gold-annotated task, used by desk-scale evaluation runs
and the test suite.

Synthesized code revisions share one set of executable lines and differ
only in a revision marker comment, so a single scripted annotation
response satisfies the body-drift rule no matter which revision ends up
final.
"""

from __future__ import annotations

import json

from .backend import ScriptedBackend, ScriptedRule
from .debugging import comment_token
from .documents import DISPLAY_KEYS, ELEMENTS, RequirementsDocument
from .evaluation import EvalTask

SIM_CREATED_AT = "2024-01-01T00:00:00+00:00"


def build_extraction_response(
    task: EvalTask, omit: tuple[str, ...] = ()
) -> str:
    """The extractor's gold parse as a flat JSON object; ``omit`` drops
    elements to force a clarification round."""
    values = {
        DISPLAY_KEYS[e]: task.gold.elements[e]
        for e in ELEMENTS
        if e in task.gold.elements and e not in omit
    }
    return json.dumps(values, ensure_ascii=False, indent=2)


def build_design_document(task: EvalTask) -> dict:
    goal = task.gold.analysis_goal
    methodology = task.gold.get("analysis_methodology") or "direct computation"
    source = task.gold.get("data_source_and_format") or "task inputs"
    output = task.gold.get("output_format") or "result"
    return {
        "Document_Type": "Algorithm Design Document",
        "Algorithm": [
            {
                "Module_Sequence": 1,
                "Module_Name": "Data Acquisition",
                "Module_Description": f"Load the inputs needed for: {goal}",
                "Input": source,
                "Output": "Loaded dataset",
                "Implementation_Details": f"Access {task.gold.platform} data services",
            },
            {
                "Module_Sequence": 2,
                "Module_Name": "Analysis",
                "Module_Description": methodology,
                "Input": "Loaded dataset",
                "Output": "Analysis result",
                "Implementation_Details": f"Apply {methodology} to the loaded data",
            },
            {
                "Module_Sequence": 3,
                "Module_Name": "Export",
                "Module_Description": f"Write the result as {output}",
                "Input": "Analysis result",
                "Output": output,
                "Implementation_Details": "Serialize the analysis result and export it",
            },
        ],
    }


def _code_lines(task: EvalTask) -> list[str]:
    language = task.gold.language.strip().lower()
    goal = task.gold.analysis_goal
    region = task.gold.get("spatial_extent") or "global"
    output = task.gold.get("output_format") or "result"
    if language == "javascript":
        return [
            f'var region = "{region}";',
            f'var goal = "{goal}";',
            "print(goal);",
            f'exportResult(region, "{output}");',
        ]
    if language == "r":
        return [
            f'region <- "{region}"',
            f'goal <- "{goal}"',
            "print(goal)",
            f'export_result(region, "{output}")',
        ]
    return [
        f'region = "{region}"',
        f'goal = "{goal}"',
        "print(goal)",
        f'export_result(region, "{output}")',
    ]


def build_code(task: EvalTask, revision: int) -> str:
    token = comment_token(task.gold.language)
    return "\n".join([f"{token} revision {revision}"] + _code_lines(task))


def build_annotation(task: EvalTask) -> str:
    token = comment_token(task.gold.language)
    design = build_design_document(task)
    lines = [
        f"{token} Created: {SIM_CREATED_AT}",
        f"{token} Platform: {task.gold.platform}",
        f"{token} Summary: {task.gold.analysis_goal}",
        "",
    ]
    code_lines = _code_lines(task)
    # One module comment ahead of each statement; spare statements ride
    # along under the last module.
    modules = design["Algorithm"]
    for i, module in enumerate(modules):
        lines.append(f"{token} Module {module['Module_Sequence']}: {module['Module_Name']}")
        if i < len(modules) - 1:
            lines.append(code_lines[i])
        else:
            lines.extend(code_lines[i:])
    return "\n".join(lines)


def build_task_rules(
    task: EvalTask,
    max_repairs: int = 8,
    omit_elements: tuple[str, ...] = (),
) -> list[ScriptedRule]:
    """Everything a scripted backend needs to replay this task's run."""
    goal = task.gold.analysis_goal
    rules = [
        ScriptedRule(
            stage_tag="requirement_analysis",
            match_substring=task.requirement_text,
            response=build_extraction_response(task, omit=omit_elements),
        ),
        ScriptedRule(
            stage_tag="algorithm_design",
            match_substring=goal,
            response=json.dumps(build_design_document(task), ensure_ascii=False, indent=2),
        ),
        ScriptedRule(
            stage_tag="code_implementation",
            match_substring=goal,
            response=build_code(task, 0),
        ),
    ]
    for revision in range(1, max_repairs + 1):
        rules.append(
            ScriptedRule(
                stage_tag="code_debugging",
                match_substring=goal,
                response=build_code(task, revision),
                consume_once=True,
            )
        )
    rules.append(
        ScriptedRule(
            stage_tag="code_annotation",
            match_substring=goal,
            response=build_annotation(task),
        )
    )
    return rules


def make_backend(
    task: EvalTask,
    max_repairs: int = 8,
    omit_elements: tuple[str, ...] = (),
) -> ScriptedBackend:
    return ScriptedBackend(build_task_rules(task, max_repairs, omit_elements))


def gold_answers(task: EvalTask, elements: tuple[str, ...]) -> dict[str, str]:
    """Clarification answers drawn from the gold parse."""
    return {e: task.gold.elements[e] for e in elements if e in task.gold.elements}


def task_from_document(
    task_id: str,
    requirement_text: str,
    gold: RequirementsDocument,
    secondary_category: int = 1,
) -> EvalTask:
    """Convenience constructor for ad-hoc scripted runs."""
    from .evaluation import PRIMARY_OF_SECONDARY

    return EvalTask(
        id=task_id,
        primary_category=PRIMARY_OF_SECONDARY[secondary_category],
        secondary_category=secondary_category,
        requirement_text=requirement_text,
        gold=gold,
    )
