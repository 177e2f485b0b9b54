from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from cop.cli import main
from cop.simulate import build_task_rules


@pytest.fixture()
def runner():
    return CliRunner()


def test_kb_import_reports_count(runner, tmp_path):
    records = [
        {
            "Dataset_id": "D1",
            "Name": "A",
            "Provider": "P",
            "Snippet": "CAT/A",
            "Tags": ["a"],
            "Description": "",
            "DOI": "",
            "Website": "",
        }
    ]
    path = tmp_path / "dataset.json"
    path.write_text(json.dumps(records), encoding="utf-8")
    result = runner.invoke(main, ["kb", "import", "dataset", str(path)])
    assert result.exit_code == 0, result.output
    assert "imported 1 dataset records" in result.output


def test_kb_import_rejects_bad_records(runner, tmp_path):
    path = tmp_path / "dataset.json"
    path.write_text(json.dumps([{"Name": "A"}]), encoding="utf-8")
    result = runner.invoke(main, ["kb", "import", "dataset", str(path)])
    assert result.exit_code != 0
    assert "Dataset_id" in result.output


def test_kb_search_uses_packaged_demo_kb(runner):
    result = runner.invoke(
        main, ["kb", "search", "function", "-q", "normalizedDifference NDVI", "-k", "2"]
    )
    assert result.exit_code == 0, result.output
    assert "ee.Image.normalizedDifference" in result.output


def test_run_with_script_completes_non_interactively(runner, tmp_path, tasks_by_id):
    task = tasks_by_id["raster-clip-brazil"]
    script = tmp_path / "script.json"
    script.write_text(
        json.dumps([r.to_jsonable() for r in build_task_rules(task)]),
        encoding="utf-8",
    )
    req_file = tmp_path / "req.txt"
    req_file.write_text(task.requirement_text, encoding="utf-8")
    out_dir = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "run", str(req_file), "--script", str(script), "--no-interactive",
            "--no-feedback", "--out", str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (out_dir / "annotated.txt").exists()
    assert (out_dir / "code.js").exists()


def test_run_interactive_clarifies_and_debugs(runner, tmp_path, tasks_by_id):
    task = tasks_by_id["landcover-indonesia"]
    script = tmp_path / "script.json"
    script.write_text(
        json.dumps(
            [
                r.to_jsonable()
                for r in build_task_rules(task, omit_elements=("output_format",))
            ]
        ),
        encoding="utf-8",
    )
    req_file = tmp_path / "req.txt"
    req_file.write_text(task.requirement_text, encoding="utf-8")
    # Answer the clarification, then (N, error), then (Y, Y).
    stdin = "GeoTIFF\nn\nReferenceError: x is not defined\ny\ny\n"
    result = runner.invoke(
        main, ["run", str(req_file), "--script", str(script)], input=stdin
    )
    assert result.exit_code == 0, result.output
    assert "Output_Format:" in result.output  # clarification console shape
    assert "--- code revision 0 ---" in result.output
    assert "--- code revision 1 ---" in result.output
    assert "--- annotated code ---" in result.output


def test_eval_run_with_config_file(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"feedback": False}), encoding="utf-8")
    first_pass = tmp_path / "fp.json"
    first_pass.write_text(json.dumps({"landcover-indonesia": 2}), encoding="utf-8")
    out = tmp_path / "run.csv"
    result = runner.invoke(
        main,
        [
            "eval", "run", "--config", str(config),
            "--first-pass", str(first_pass), "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    # feedback off: nothing can pass after revision 0, and the row says so.
    assert lines[1].startswith("true,true,false,100.0,0.0,0.0")


def test_eval_sweep_writes_labeled_rows(runner, tmp_path):
    first_pass = tmp_path / "fp.json"
    first_pass.write_text(
        json.dumps(
            {
                "geometry-circle-sanjose": 0,
                "raster-clip-brazil": 2,
                "spatiotemporal-fire-amazon": None,
                "vegetation-ndvi-china": 0,
                "landcover-indonesia": 1,
                "hydromet-precip-alaska": 5,
                "export-landcover-california": 0,
                "visualization-ndvi-usa": None,
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "sweep.csv"
    result = runner.invoke(
        main,
        ["eval", "sweep", "--first-pass", str(first_pass), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "label,exe,acc"
    assert lines[1].startswith("Debugging@0,")
    # 3 of 8 tasks pass at k=0; 8ths: 37.5
    assert lines[1] == "Debugging@0,37.5,37.5"
    assert lines[3] == "Debugging@3,62.5,62.5"


def test_eval_ablate_produces_eight_rows(runner, tmp_path):
    first_pass = tmp_path / "fp.json"
    first_pass.write_text(json.dumps({}), encoding="utf-8")
    out = tmp_path / "ablate.csv"
    result = runner.invoke(
        main,
        ["eval", "ablate", "--first-pass", str(first_pass), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "pool,retrieval,feedback,ma,exe,acc,re"
    assert len(lines) == 9


def test_eval_run_with_external_verdicts(runner, tmp_path, corpus):
    verdicts = [
        {"task_id": task.id, "executable": i % 2 == 0, "correct": i % 4 == 0}
        for i, task in enumerate(corpus)
    ]
    verdicts_file = tmp_path / "verdicts.json"
    verdicts_file.write_text(json.dumps(verdicts), encoding="utf-8")
    readability = {task.id: [9, 7, 8, 6, 10] for task in corpus}
    readability_file = tmp_path / "readability.json"
    readability_file.write_text(json.dumps(readability), encoding="utf-8")
    out = tmp_path / "run.csv"
    result = runner.invoke(
        main,
        [
            "eval", "run", "--verdicts", str(verdicts_file),
            "--readability", str(readability_file), "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    # 4/8 executable, 2/8 correct, readability 80.0 for every task.
    assert lines[1] == "true,true,true,100.0,50.0,25.0,80.0"


def test_eval_run_requires_an_outcome_source(runner, tmp_path):
    out = tmp_path / "r.csv"
    result = runner.invoke(main, ["eval", "run", "--out", str(out)])
    assert result.exit_code != 0
    assert "first-pass" in result.output or "verdicts" in result.output
