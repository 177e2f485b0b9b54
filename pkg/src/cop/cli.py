"""Command line interface: KB import/search, interactive runs, the
HTTP server, and the evaluation commands."""

from __future__ import annotations

import json
import os
from pathlib import Path

import click

from .backend import HttpChatBackend, ScriptedBackend, load_script
from .config import AblationConfig, RunConfig
from .debugging import DebugFeedback
from .errors import CopError
from .evaluation import (
    ALL_MECHANISM_CONFIGS,
    load_corpus,
    load_first_passing,
    load_readability,
    load_verdicts,
    run_ablation,
    run_debug_sweep,
    emit_report,
    AblationTable,
    AblationRow,
    MetricReport,
    round1,
    score_accuracy,
    score_executability,
)
from .kb import KB_KINDS, load_kb
from .service import CopService, create_app, load_default_kbs, load_kb_dir
from .session import Phase, Session, export_artifacts


def _build_backend(script: str | None, model: str | None):
    if script:
        return ScriptedBackend(load_script(script))
    if model:
        return HttpChatBackend(model=model)
    return None


@click.group()
def main() -> None:
    """Staged, human-in-the-loop geospatial code generation."""


# ----------------------------------------------------------------------
# kb


@main.group()
def kb() -> None:
    """Knowledge base management."""


@kb.command("import")
@click.argument("kind", type=click.Choice(KB_KINDS))
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def kb_import(kind: str, path: str) -> None:
    """Validate a KB file and report its record count."""
    try:
        index = load_kb(path, kind)
    except CopError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"imported {len(index)} {kind} records from {path}")


@kb.command("search")
@click.argument("kind", type=click.Choice(KB_KINDS))
@click.option("--query", "-q", required=True)
@click.option("--platform", default=None)
@click.option("--language", default=None)
@click.option("-k", "top_k", default=5, show_default=True)
@click.option("--path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="KB file to search; defaults to the packaged demo KB.")
def kb_search(kind: str, query: str, platform: str | None, language: str | None,
              top_k: int, path: str | None) -> None:
    """Search one knowledge base and print the ranked hits."""
    try:
        if path:
            index = load_kb(path, kind)
        else:
            index = load_default_kbs().get(kind)
    except CopError as exc:
        raise click.ClickException(str(exc))
    assert index is not None
    filters = {}
    if platform:
        filters["platform"] = platform
    if language:
        filters["language"] = language
    hits = index.search(query, filters=filters or None, k=top_k)
    if not hits:
        click.echo("no hits")
        return
    for hit in hits:
        click.echo(f"{hit.score:8.4f}  {hit.record_id}  {hit.snippet}")


# ----------------------------------------------------------------------
# serve


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--script", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Scripted backend rules (JSON array) instead of a live model.")
@click.option("--model", default=None, help="Model name for the HTTP backend.")
@click.option("--kb-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--sessions-dir", default=None,
              help="Event log directory; defaults to $COP_SESSIONS_DIR.")
@click.option("--frontend-dir", type=click.Path(file_okay=False), default=None,
              help="Static assets for the operator console.")
def serve(host: str, port: int, script: str | None, model: str | None,
          kb_dir: str | None, sessions_dir: str | None, frontend_dir: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    backend = _build_backend(script, model)
    kbs = load_kb_dir(kb_dir) if kb_dir else load_default_kbs()
    sessions = sessions_dir or os.environ.get("COP_SESSIONS_DIR")
    service = CopService(backend=backend, kbs=kbs, sessions_dir=sessions)
    app = create_app(service, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


# ----------------------------------------------------------------------
# run


def _ask_feedback() -> DebugFeedback:
    executable = click.confirm("Did the script run?", default=True)
    if not executable:
        error_text = click.prompt("Paste the console error")
        return DebugFeedback(executable=False, error_text=error_text)
    correct = click.confirm("Is the result correct?", default=True)
    if correct:
        return DebugFeedback(executable=True, correct=True)
    observed = click.prompt("Describe the observed output")
    return DebugFeedback(executable=True, correct=False, observed_output=observed)


@main.command()
@click.argument("requirements_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--interactive/--no-interactive", default=True, show_default=True)
@click.option("--script", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--model", default=None)
@click.option("--kb-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory to export the final artifacts into.")
@click.option("--pool/--no-pool", default=True, show_default=True)
@click.option("--retrieval/--no-retrieval", default=True, show_default=True)
@click.option("--feedback/--no-feedback", default=True, show_default=True)
@click.option("--max-debug", default=3, show_default=True)
def run(requirements_file: str, interactive: bool, script: str | None,
        model: str | None, kb_dir: str | None, out: str | None,
        pool: bool, retrieval: bool, feedback: bool, max_debug: int) -> None:
    """Run one task from a requirements text file, prompting in the
    terminal for clarifications and debug feedback."""
    backend = _build_backend(script, model)
    if backend is None:
        raise click.ClickException(
            "no backend: pass --script, or --model with COP_API_BASE set"
        )
    text = Path(requirements_file).read_text(encoding="utf-8").strip()
    if not text:
        raise click.ClickException("requirements file is empty")
    config = RunConfig(
        ablation=AblationConfig(
            pool=pool, retrieval=retrieval, feedback=feedback,
            max_debug_iterations=max_debug,
        )
    )
    kbs = load_kb_dir(kb_dir) if kb_dir else load_default_kbs()
    session = Session(requirement_text=text, config=config, backend=backend, kbs=kbs)
    try:
        session.start()
        while session.phase is Phase.CLARIFYING:
            assert session.pending_clarification is not None
            click.echo(session.pending_clarification.prompt_text)
            if not interactive:
                raise click.ClickException(
                    "clarification needed but --no-interactive was given"
                )
            answers = {
                element: click.prompt(element)
                for element in session.pending_clarification.missing
            }
            session.answer(answers)
        if session.requirements is not None:
            click.echo(json.dumps(session.requirements.to_json(), indent=2))
        if session.design is not None:
            click.echo(json.dumps(session.design.to_json(), indent=2))
        while session.phase is Phase.AWAITING_FEEDBACK:
            click.echo(f"\n--- code revision {session.artifacts[-1].revision} ---")
            click.echo(session.artifacts[-1].source)
            if not interactive:
                break
            session.feedback(_ask_feedback())
    except CopError as exc:
        raise click.ClickException(f"{type(exc).__name__}: {exc}")
    if session.annotated is not None:
        click.echo("\n--- annotated code ---")
        click.echo(session.annotated.text)
        if session.exhausted:
            click.echo("note: debug iteration limit reached before a passing run")
    if out:
        paths = export_artifacts(session, out)
        click.echo("exported: " + ", ".join(str(p) for p in paths))


# ----------------------------------------------------------------------
# eval


@main.group("eval")
def eval_group() -> None:
    """Desk-scale evaluation runs."""


def _sim_options(func):
    func = click.option("--corpus", type=click.Path(exists=True, dir_okay=False),
                        default=None, help="Task corpus; defaults to the packaged one.")(func)
    func = click.option("--kb-dir", type=click.Path(exists=True, file_okay=False),
                        default=None)(func)
    func = click.option("--first-pass", "first_pass",
                        type=click.Path(exists=True, dir_okay=False), default=None,
                        help="Simulation script: task id -> first passing revision.")(func)
    func = click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                        default="csv", show_default=True)(func)
    func = click.option("--out", type=click.Path(dir_okay=False), required=True)(func)
    return func


def _load_tasks(corpus: str | None):
    if corpus:
        return load_corpus(corpus)
    from importlib import resources

    with resources.as_file(resources.files("cop") / "data" / "eval_tasks.json") as path:
        return load_corpus(path)


def _load_kbs(kb_dir: str | None):
    return load_kb_dir(kb_dir) if kb_dir else load_default_kbs()


@eval_group.command("run")
@_sim_options
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with pool/retrieval/feedback toggles.")
@click.option("--verdicts", type=click.Path(exists=True, dir_okay=False), default=None,
              help="External verdict file from humans who ran the code.")
@click.option("--readability", type=click.Path(exists=True, dir_okay=False), default=None)
def eval_run(corpus: str | None, kb_dir: str | None, first_pass: str | None,
             fmt: str, out: str, config_file: str | None,
             verdicts: str | None, readability: str | None) -> None:
    """Run the corpus under one mechanism config and emit its metrics."""
    tasks = _load_tasks(corpus)
    if config_file:
        raw = json.loads(Path(config_file).read_text(encoding="utf-8"))
        ablation = AblationConfig(
            pool=bool(raw.get("pool", True)),
            retrieval=bool(raw.get("retrieval", True)),
            feedback=bool(raw.get("feedback", True)),
            max_debug_iterations=int(raw.get("max_debug_iterations", 3)),
        )
    else:
        ablation = AblationConfig()
    if first_pass is None and verdicts is None:
        raise click.ClickException("pass --first-pass or --verdicts for outcomes")
    first_passing = load_first_passing(first_pass) if first_pass else None
    readability_map = load_readability(readability) if readability else None
    if verdicts:
        # External outcomes: treat every passing task as fixed at revision 0.
        verdict_list = load_verdicts(verdicts)
        first_passing = {v.task_id: (0 if v.correct else None) for v in verdict_list}
        table = run_ablation(
            tasks, [ablation], kbs=_load_kbs(kb_dir),
            first_passing=first_passing, readability=readability_map,
        )
        by_id = {v.task_id: v for v in verdict_list}
        row = table.rows[0]
        scored = [by_id[c.task_id] for c in row.cells if c.task_id in by_id]
        matchabilities = [c.matchability for c in row.cells if c.matchability is not None]
        readabilities = [c.readability for c in row.cells if c.readability is not None]
        table = AblationTable(rows=[AblationRow(
            config=row.config,
            report=MetricReport(
                matchability=round1(sum(matchabilities) / len(matchabilities))
                if matchabilities else 0.0,
                executability=score_executability(scored),
                accuracy=score_accuracy(scored),
                readability=round1(sum(readabilities) / len(readabilities))
                if readabilities else None,
            ),
            cells=row.cells,
        )])
    else:
        table = run_ablation(
            tasks, [ablation], kbs=_load_kbs(kb_dir),
            first_passing=first_passing, readability=readability_map,
        )
    emit_report(table, fmt, out)
    click.echo(f"wrote {out}")


@eval_group.command("ablate")
@_sim_options
@click.option("--readability", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--max-debug", default=3, show_default=True)
def eval_ablate(corpus: str | None, kb_dir: str | None, first_pass: str | None,
                fmt: str, out: str, readability: str | None, max_debug: int) -> None:
    """Run all eight mechanism combinations over the corpus."""
    if first_pass is None:
        raise click.ClickException("--first-pass is required for simulated runs")
    tasks = _load_tasks(corpus)
    configs = [
        AblationConfig(pool=p, retrieval=r, feedback=f, max_debug_iterations=max_debug)
        for p, r, f in ALL_MECHANISM_CONFIGS
    ]
    table = run_ablation(
        tasks, configs, kbs=_load_kbs(kb_dir),
        first_passing=load_first_passing(first_pass),
        readability=load_readability(readability) if readability else None,
    )
    emit_report(table, fmt, out)
    click.echo(f"wrote {out}")


@eval_group.command("sweep")
@_sim_options
@click.option("--ks", default="0,1,3,5", show_default=True,
              help="Comma-separated debug iteration caps.")
def eval_sweep(corpus: str | None, kb_dir: str | None, first_pass: str | None,
               fmt: str, out: str, ks: str) -> None:
    """Sweep the debug iteration cap and emit pass rates per cap."""
    if first_pass is None:
        raise click.ClickException("--first-pass is required for simulated runs")
    try:
        k_values = [int(part) for part in ks.split(",") if part.strip() != ""]
    except ValueError:
        raise click.ClickException(f"bad --ks value: {ks!r}")
    tasks = _load_tasks(corpus)
    table = run_debug_sweep(
        tasks, k_values, kbs=_load_kbs(kb_dir),
        first_passing=load_first_passing(first_pass),
    )
    emit_report(table, fmt, out)
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main(prog_name="cop")
