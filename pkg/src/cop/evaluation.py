"""Measurement harness: gold-annotated task corpus, the four metrics,
mechanism ablations, and debug-iteration sweeps, with deterministic
table emitters.

Entity matching uses normalized string equality plus per-task alias
sets so scoring is reproducible without expert judgment. Execution
outcomes come either from external verdict files (humans ran the code)
or from declarative simulation scripts mapping each task to the first
code revision that passes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from pathlib import Path
from typing import Any, Callable, Sequence

from .backend import ChatBackend, RecordingBackend
from .clock import Clock, FixedClock
from .config import AblationConfig, RunConfig
from .documents import RequirementsDocument
from .errors import CopError, EmptyVerdicts, IoFailure, OutOfRange, ParseError
from .kb import KbCatalog
from .requirements import PROVENANCE_INFERRED
from .session import Phase, Session

# Taxonomy grouping: secondary categories 1-3, 4-6, 7-8 belong to
# primary categories 1, 2, 3 respectively.
PRIMARY_OF_SECONDARY = {1: 1, 2: 1, 3: 1, 4: 2, 5: 2, 6: 2, 7: 3, 8: 3}

PRIMARY_CATEGORY_NAMES = {
    1: "Data Preparation and Preprocessing",
    2: "Data Analysis",
    3: "Data Output and Visualization",
}


@dataclass(frozen=True)
class EvalTask:
    id: str
    primary_category: int
    secondary_category: int
    requirement_text: str
    gold: RequirementsDocument
    alias_sets: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.secondary_category not in PRIMARY_OF_SECONDARY:
            raise ValueError(f"secondary_category must be 1..8, got {self.secondary_category}")
        expected = PRIMARY_OF_SECONDARY[self.secondary_category]
        if self.primary_category != expected:
            raise ValueError(
                f"task {self.id}: secondary {self.secondary_category} belongs to"
                f" primary {expected}, not {self.primary_category}"
            )


@dataclass(frozen=True)
class Verdict:
    task_id: str
    executable: bool
    correct: bool
    source: str = "external"  # external | simulated

    def __post_init__(self):
        if self.correct and not self.executable:
            raise ValueError("a non-running program cannot be correct")


def load_corpus(path: str | Path) -> list[EvalTask]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot load corpus {path}: {exc}") from exc
    if not isinstance(data, list):
        raise ParseError(f"{path}: expected a JSON array of tasks")
    tasks = []
    seen: set[str] = set()
    for raw in data:
        task = EvalTask(
            id=raw["id"],
            primary_category=raw["primary_category"],
            secondary_category=raw["secondary_category"],
            requirement_text=raw["requirement_text"],
            gold=RequirementsDocument.from_json(raw["gold"]),
            alias_sets={
                k: tuple(v) for k, v in raw.get("alias_sets", {}).items()
            },
        )
        if task.id in seen:
            raise ParseError(f"{path}: duplicate task id {task.id!r}")
        seen.add(task.id)
        tasks.append(task)
    return tasks


def load_verdicts(path: str | Path) -> list[Verdict]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot load verdicts {path}: {exc}") from exc
    return [
        Verdict(
            task_id=raw["task_id"],
            executable=bool(raw["executable"]),
            correct=bool(raw["correct"]),
            source=raw.get("source", "external"),
        )
        for raw in data
    ]


def load_first_passing(path: str | Path) -> dict[str, int | None]:
    """Simulation script: task id -> first revision that passes (null = never)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot load simulation script {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected an object mapping task id to revision")
    return {k: (None if v is None else int(v)) for k, v in data.items()}


def load_readability(path: str | Path) -> dict[str, list[int]]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot load readability scores {path}: {exc}") from exc
    return {k: list(v) for k, v in data.items()}


# ----------------------------------------------------------------------
# metrics


def round1(value: float) -> float:
    """Half-up to one decimal, as printed in every report."""
    return float(Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


_TRAILING_PUNCT = ".,;:!?"


def normalize_entity(value: str) -> str:
    collapsed = " ".join(value.split())
    return collapsed.rstrip(_TRAILING_PUNCT).strip().casefold()


def score_matchability(
    pred: RequirementsDocument,
    gold: RequirementsDocument,
    alias_sets: dict[str, tuple[str, ...]] | None = None,
    exclude_inferred: bool = False,
) -> float:
    """Entity match rate against the gold annotation.

    The denominator is the number of gold-applicable elements; an
    element matches on normalized equality with the gold value or any
    registered alias. ``exclude_inferred`` drops elements the pipeline
    marked as model-inferred from the numerator and denominator.
    """
    alias_sets = alias_sets or {}
    applicable = gold.applicable_elements()
    if exclude_inferred:
        applicable = [
            e for e in applicable
            if pred.provenance.get(e) != PROVENANCE_INFERRED
        ]
    if not applicable:
        return 100.0
    matched = 0
    for element in applicable:
        value = pred.get(element)
        if value is None:
            continue
        norm = normalize_entity(value)
        accepted = {normalize_entity(gold.elements[element])}
        accepted.update(normalize_entity(a) for a in alias_sets.get(element, ()))
        if norm in accepted:
            matched += 1
    return round1(100.0 * matched / len(applicable))


def score_executability(verdicts: Sequence[Verdict]) -> float:
    if not verdicts:
        raise EmptyVerdicts("no verdicts to score")
    return round1(100.0 * sum(v.executable for v in verdicts) / len(verdicts))


def score_accuracy(verdicts: Sequence[Verdict]) -> float:
    # Non-executable counts as incorrect, so accuracy <= executability.
    if not verdicts:
        raise EmptyVerdicts("no verdicts to score")
    return round1(100.0 * sum(v.correct for v in verdicts) / len(verdicts))


def score_readability(scores: Sequence[int]) -> float:
    """Five expert scores 1..10: drop one max and one min, average the
    remaining three, scale to percent."""
    if len(scores) != 5:
        raise OutOfRange(f"expected exactly five scores, got {len(scores)}")
    for value in scores:
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 10:
            raise OutOfRange(f"score out of range 1..10: {value!r}")
    trimmed = sorted(scores)[1:-1]
    return round1(sum(trimmed) / 3 * 10)


@dataclass(frozen=True)
class MetricReport:
    matchability: float
    executability: float
    accuracy: float
    readability: float | None

    def __post_init__(self):
        for name in ("matchability", "executability", "accuracy"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"{name} out of range: {value}")
        if self.readability is not None and not 0.0 <= self.readability <= 100.0:
            raise ValueError(f"readability out of range: {self.readability}")


# ----------------------------------------------------------------------
# pipeline runs

BackendBuilder = Callable[[EvalTask, RunConfig], ChatBackend]
ClockFactory = Callable[[], Clock]


def _with_ablation(base: RunConfig, ablation: AblationConfig) -> RunConfig:
    return RunConfig(
        ablation=ablation,
        k_per_kb=base.k_per_kb,
        max_clarification_rounds=base.max_clarification_rounds,
        max_reasks=base.max_reasks,
        temperature_structured=base.temperature_structured,
        temperature_code=base.temperature_code,
        max_tokens=base.max_tokens,
        max_design_modules=base.max_design_modules,
    )


@dataclass
class CellResult:
    """Outcome of one (task, config) pipeline run."""

    task_id: str
    error: str | None = None
    matchability: float | None = None
    executable: bool = False
    correct: bool = False
    readability: float | None = None
    revisions: int = 0
    exhausted: bool = False
    prompts: dict[str, list[str]] = field(default_factory=dict)


def simulated_feedback(first_passing: int | None, revision: int):
    """Feedback a scripted user would give for ``revision``."""
    from .debugging import DebugFeedback

    if first_passing is not None and revision >= first_passing:
        return DebugFeedback(executable=True, correct=True)
    return DebugFeedback(
        executable=False,
        error_text=f"simulated failure: revision {revision} rejected",
    )


def run_task(
    task: EvalTask,
    config: RunConfig,
    backend: ChatBackend,
    kbs: KbCatalog,
    first_passing: int | None,
    readability_scores: Sequence[int] | None = None,
    clock: Clock | None = None,
    answers: dict[str, str] | None = None,
) -> CellResult:
    """Run one task end to end against a scripted backend and score it.

    Executable/correct follow the simulation rule: the task passes at
    debug budget k iff its first passing revision r satisfies r <= k
    (k = 0 when the feedback mechanism is disabled).
    """
    recording = RecordingBackend(backend)
    cell = CellResult(task_id=task.id)
    session = Session(
        requirement_text=task.requirement_text,
        config=config,
        backend=recording,
        kbs=kbs,
        clock=clock or FixedClock(),
        session_id=f"eval-{task.id}",
    )
    try:
        session.start()
        if session.phase is Phase.CLARIFYING and answers:
            session.answer(answers)
        while session.phase is Phase.AWAITING_FEEDBACK:
            revision = session.artifacts[-1].revision
            session.feedback(simulated_feedback(first_passing, revision))
    except CopError as exc:
        cell.error = f"{type(exc).__name__}: {exc}"
    cell.prompts = {
        tag: recording.prompts_for(tag)
        for tag in (
            "requirement_analysis",
            "algorithm_design",
            "code_implementation",
            "code_debugging",
            "code_annotation",
        )
    }
    cell.revisions = len(session.artifacts)
    cell.exhausted = session.exhausted
    if session.requirements is not None:
        cell.matchability = score_matchability(
            session.requirements, task.gold, task.alias_sets
        )
    if cell.error is None:
        budget = config.ablation.max_debug_iterations if config.ablation.feedback else 0
        passed = first_passing is not None and first_passing <= budget
        cell.executable = passed
        cell.correct = passed
    if readability_scores is not None:
        cell.readability = score_readability(readability_scores)
    return cell


def _aggregate(cells: list[CellResult]) -> MetricReport:
    matchabilities = [c.matchability for c in cells if c.matchability is not None]
    matchability = (
        round1(sum(matchabilities) / len(matchabilities)) if matchabilities else 0.0
    )
    verdicts = [
        Verdict(c.task_id, c.executable, c.correct, source="simulated") for c in cells
    ]
    readabilities = [c.readability for c in cells if c.readability is not None]
    readability = (
        round1(sum(readabilities) / len(readabilities)) if readabilities else None
    )
    return MetricReport(
        matchability=matchability,
        executability=score_executability(verdicts),
        accuracy=score_accuracy(verdicts),
        readability=readability,
    )


def _default_backend_builder() -> BackendBuilder:
    from .simulate import make_backend

    return lambda task, config: make_backend(task)


ALL_MECHANISM_CONFIGS: tuple[tuple[bool, bool, bool], ...] = (
    (False, False, False),
    (True, False, False),
    (False, True, False),
    (False, False, True),
    (True, True, False),
    (False, True, True),
    (True, False, True),
    (True, True, True),
)


@dataclass
class AblationRow:
    config: AblationConfig
    report: MetricReport
    cells: list[CellResult]


@dataclass
class AblationTable:
    rows: list[AblationRow]


def run_ablation(
    tasks: Sequence[EvalTask],
    configs: Sequence[AblationConfig],
    *,
    kbs: KbCatalog | None = None,
    first_passing: dict[str, int | None] | None = None,
    readability: dict[str, list[int]] | None = None,
    backend_builder: BackendBuilder | None = None,
    base_config: RunConfig | None = None,
) -> AblationTable:
    """One pipeline run per (task, config); errors are recorded per
    cell and never abort the sweep."""
    kbs = kbs or KbCatalog()
    first_passing = first_passing or {}
    readability = readability or {}
    backend_builder = backend_builder or _default_backend_builder()
    base = base_config or RunConfig()
    rows = []
    for ablation in configs:
        run_config = _with_ablation(base, ablation)
        cells = []
        for task in tasks:
            cells.append(
                run_task(
                    task,
                    run_config,
                    backend_builder(task, run_config),
                    kbs,
                    first_passing.get(task.id),
                    readability.get(task.id),
                )
            )
        rows.append(AblationRow(config=ablation, report=_aggregate(cells), cells=cells))
    return AblationTable(rows=rows)


@dataclass
class SweepRow:
    k: int
    label: str
    executability: float
    accuracy: float
    cells: list[CellResult]


@dataclass
class SweepTable:
    rows: list[SweepRow]


def run_debug_sweep(
    tasks: Sequence[EvalTask],
    ks: Sequence[int] = (0, 1, 3, 5),
    *,
    kbs: KbCatalog | None = None,
    first_passing: dict[str, int | None] | None = None,
    backend_builder: BackendBuilder | None = None,
    base_config: RunConfig | None = None,
) -> SweepTable:
    """Cap the debug loop at each k and measure which tasks pass."""
    kbs = kbs or KbCatalog()
    first_passing = first_passing or {}
    backend_builder = backend_builder or _default_backend_builder()
    base = base_config or RunConfig()
    rows = []
    for k in ks:
        ablation = AblationConfig(
            pool=True, retrieval=True, feedback=True, max_debug_iterations=k
        )
        run_config = _with_ablation(base, ablation)
        cells = [
            run_task(
                task,
                run_config,
                backend_builder(task, run_config),
                kbs,
                first_passing.get(task.id),
            )
            for task in tasks
        ]
        verdicts = [
            Verdict(c.task_id, c.executable, c.correct, source="simulated")
            for c in cells
        ]
        rows.append(
            SweepRow(
                k=k,
                label=f"Debugging@{k}",
                executability=score_executability(verdicts),
                accuracy=score_accuracy(verdicts),
                cells=cells,
            )
        )
    return SweepTable(rows=rows)


# ----------------------------------------------------------------------
# report emission


def _fmt_percent(value: float | None) -> str:
    return "" if value is None else f"{value:.1f}"


def _fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def _ablation_jsonable(table: AblationTable) -> list[dict[str, Any]]:
    return [
        {
            "pool": row.config.pool,
            "retrieval": row.config.retrieval,
            "feedback": row.config.feedback,
            "ma": row.report.matchability,
            "exe": row.report.executability,
            "acc": row.report.accuracy,
            "re": row.report.readability,
        }
        for row in table.rows
    ]


def _sweep_jsonable(table: SweepTable) -> list[dict[str, Any]]:
    return [
        {"label": row.label, "exe": row.executability, "acc": row.accuracy}
        for row in table.rows
    ]


def emit_report(table: AblationTable | SweepTable, format: str, path: str | Path) -> None:
    """Write a table as CSV or JSON with a deterministic layout."""
    if isinstance(table, AblationTable):
        if not table.rows:
            raise ValueError("empty table")
        if format == "csv":
            lines = ["pool,retrieval,feedback,ma,exe,acc,re"]
            for row in table.rows:
                lines.append(
                    ",".join(
                        (
                            _fmt_bool(row.config.pool),
                            _fmt_bool(row.config.retrieval),
                            _fmt_bool(row.config.feedback),
                            _fmt_percent(row.report.matchability),
                            _fmt_percent(row.report.executability),
                            _fmt_percent(row.report.accuracy),
                            _fmt_percent(row.report.readability),
                        )
                    )
                )
            content = "\n".join(lines) + "\n"
        elif format == "json":
            content = json.dumps(
                {"rows": _ablation_jsonable(table)}, indent=2, sort_keys=True
            ) + "\n"
        else:
            raise ValueError(f"unknown format: {format!r}")
    elif isinstance(table, SweepTable):
        if not table.rows:
            raise ValueError("empty table")
        if format == "csv":
            lines = ["label,exe,acc"]
            for row in table.rows:
                lines.append(
                    f"{row.label},{_fmt_percent(row.executability)},{_fmt_percent(row.accuracy)}"
                )
            content = "\n".join(lines) + "\n"
        elif format == "json":
            content = json.dumps(
                {"rows": _sweep_jsonable(table)}, indent=2, sort_keys=True
            ) + "\n"
        else:
            raise ValueError(f"unknown format: {format!r}")
    else:
        raise ValueError(f"unsupported table type: {type(table).__name__}")
    try:
        Path(path).write_text(content, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc
