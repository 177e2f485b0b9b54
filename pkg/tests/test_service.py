from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from cop.backend import ScriptedBackend
from cop.clock import FixedClock
from cop.service import CopService, create_app
from cop.session import new_session_id
from cop.simulate import build_task_rules, gold_answers


@pytest.fixture()
def client(tasks_by_id, kbs, tmp_path):
    rules = []
    for task in tasks_by_id.values():
        rules.extend(build_task_rules(task))
    # The Indonesia task additionally gets a partial-extraction variant
    # keyed by a marker suffix so one server can serve both shapes.
    partial = tasks_by_id["landcover-indonesia"]
    rules[0:0] = build_task_rules(
        partial, omit_elements=("data_source_and_format", "output_format")
    )[:1]
    rules[0].match_substring = "PARTIAL::"
    service = CopService(
        backend=ScriptedBackend(rules),
        kbs=kbs,
        sessions_dir=tmp_path / "sessions",
        clock_factory=FixedClock,
        id_factory=new_session_id,
    )
    return TestClient(create_app(service))


def _create(client, text: str) -> dict:
    response = client.post("/api/tasks", json={"requirement_text": text})
    assert response.status_code == 200, response.text
    return response.json()


def test_create_task_runs_through_generation(client, tasks_by_id):
    task = tasks_by_id["raster-clip-brazil"]
    view = _create(client, task.requirement_text)
    assert view["phase"] == "AwaitingFeedback"
    assert view["requirements"]["requirements"]["Platform"] == "Google Earth Engine"
    assert view["design"]["Document_Type"] == "Algorithm Design Document"
    assert len(view["code_revisions"]) == 1


def test_create_task_validates_body(client):
    assert client.post("/api/tasks", json={}).status_code == 400
    assert client.post("/api/tasks", json={"requirement_text": "  "}).status_code == 400
    response = client.post(
        "/api/tasks", json={"requirement_text": "x", "config": "notdict"}
    )
    assert response.status_code == 400


def test_clarification_roundtrip(client, tasks_by_id):
    task = tasks_by_id["landcover-indonesia"]
    view = _create(client, "PARTIAL::" + task.requirement_text)
    assert view["phase"] == "Clarifying"
    assert view["clarification"]["missing"] == [
        "data_source_and_format", "output_format",
    ]
    session_id = view["session_id"]
    answers = gold_answers(task, ("data_source_and_format", "output_format"))
    response = client.post(f"/api/tasks/{session_id}/answers", json={"answers": answers})
    assert response.status_code == 200
    assert response.json()["phase"] == "AwaitingFeedback"


def test_answers_error_mapping(client, tasks_by_id):
    task = tasks_by_id["landcover-indonesia"]
    view = _create(client, "PARTIAL::" + task.requirement_text)
    session_id = view["session_id"]
    assert (
        client.post(f"/api/tasks/{session_id}/answers", json={}).status_code == 400
    )
    assert (
        client.post(
            f"/api/tasks/{session_id}/answers", json={"answers": {"bogus": "x"}}
        ).status_code
        == 400
    )
    assert (
        client.post(
            "/api/tasks/missing/answers", json={"answers": {"output_format": "x"}}
        ).status_code
        == 404
    )
    done = _create(client, tasks_by_id["raster-clip-brazil"].requirement_text)
    assert (
        client.post(
            f"/api/tasks/{done['session_id']}/answers",
            json={"answers": {"output_format": "x"}},
        ).status_code
        == 409
    )


def test_feedback_loop_to_done(client, tasks_by_id):
    task = tasks_by_id["raster-clip-brazil"]
    view = _create(client, task.requirement_text)
    session_id = view["session_id"]
    response = client.post(
        f"/api/tasks/{session_id}/feedback",
        json={"executable": False, "error_text": "ReferenceError"},
    )
    assert response.status_code == 200
    body = response.json()
    assert body["phase"] == "AwaitingFeedback"
    assert len(body["code_revisions"]) == 2
    response = client.post(
        f"/api/tasks/{session_id}/feedback",
        json={"executable": True, "correct": True},
    )
    body = response.json()
    assert body["phase"] == "Done"
    assert body["annotated"] is not None
    assert body["exhausted"] is False


def test_feedback_error_mapping(client, tasks_by_id):
    task = tasks_by_id["raster-clip-brazil"]
    view = _create(client, task.requirement_text)
    session_id = view["session_id"]
    assert (
        client.post(f"/api/tasks/{session_id}/feedback", json={}).status_code == 400
    )
    assert (
        client.post(
            f"/api/tasks/{session_id}/feedback", json={"executable": False}
        ).status_code
        == 400
    )
    assert (
        client.post(
            "/api/tasks/missing/feedback", json={"executable": True, "correct": True}
        ).status_code
        == 404
    )
    clarifying = _create(
        client, "PARTIAL::" + tasks_by_id["landcover-indonesia"].requirement_text
    )
    assert (
        client.post(
            f"/api/tasks/{clarifying['session_id']}/feedback",
            json={"executable": True, "correct": True},
        ).status_code
        == 409
    )


def test_get_task_and_artifacts(client, tasks_by_id):
    task = tasks_by_id["raster-clip-brazil"]
    view = _create(client, task.requirement_text)
    session_id = view["session_id"]
    summary = client.get(f"/api/tasks/{session_id}").json()
    assert summary["phase"] == "AwaitingFeedback"
    assert summary["event_count"] >= 4
    artifacts = client.get(f"/api/tasks/{session_id}/artifacts").json()
    kinds = [entry["kind"] for entry in artifacts["snapshot"]]
    assert kinds == ["RequirementsDoc", "AlgorithmDesign", "CodeDraft"]
    assert client.get("/api/tasks/nope").status_code == 404
    assert client.get("/api/tasks/nope/artifacts").status_code == 404


def test_kb_search_endpoint(client):
    response = client.get(
        "/api/kb/function/search",
        params={"q": "normalizedDifference NDVI", "k": 3},
    )
    assert response.status_code == 200
    hits = response.json()["hits"]
    assert hits and hits[0]["record_id"] == "F002"
    filtered = client.get(
        "/api/kb/function/search",
        params={"q": "buffer circular area", "platform": "ArcGIS API for Python"},
    ).json()["hits"]
    assert filtered
    assert all("platform=ArcGIS API for Python" in h["snippet"] for h in filtered)
    assert client.get("/api/kb/bogus/search", params={"q": "x"}).status_code == 400
    assert (
        client.get("/api/kb/function/search", params={"q": "x", "k": 0}).status_code
        == 400
    )


def test_sessions_persist_across_service_restart(tasks_by_id, kbs, tmp_path):
    task = tasks_by_id["raster-clip-brazil"]
    rules = build_task_rules(task)
    service = CopService(
        backend=ScriptedBackend(rules), kbs=kbs,
        sessions_dir=tmp_path / "sessions", clock_factory=FixedClock,
    )
    client = TestClient(create_app(service))
    view = _create(client, task.requirement_text)
    session_id = view["session_id"]
    # A new service over the same directory can resume the session.
    service2 = CopService(
        backend=ScriptedBackend(build_task_rules(task)), kbs=kbs,
        sessions_dir=tmp_path / "sessions", clock_factory=FixedClock,
    )
    client2 = TestClient(create_app(service2))
    artifacts = client2.get(f"/api/tasks/{session_id}/artifacts").json()
    assert artifacts["phase"] == "AwaitingFeedback"
    response = client2.post(
        f"/api/tasks/{session_id}/feedback",
        json={"executable": True, "correct": True},
    )
    assert response.json()["phase"] == "Done"


def test_backendless_service_returns_503(kbs):
    service = CopService(backend=None, kbs=kbs)
    client = TestClient(create_app(service))
    response = client.post("/api/tasks", json={"requirement_text": "x"})
    assert response.status_code == 503
