"""HTTP service exposing interactive sessions and KB search.

One JSON API, consumed by the operator console and the CLI: create a
task, answer clarifications, submit debug feedback, fetch artifacts,
search knowledge bases. Per-session requests are serialized; pipeline
failures are recorded on the session and reported in its view rather
than as transport errors.
"""

from __future__ import annotations

import threading
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles

from .backend import ChatBackend
from .clock import Clock, SystemClock
from .config import AblationConfig, RunConfig
from .debugging import DebugFeedback
from .errors import (
    BackendUnavailable,
    CopError,
    EmptyAnswer,
    InvalidFeedback,
    UnknownElement,
    UnknownSession,
    WrongPhase,
)
from .kb import KB_KINDS, KbCatalog, load_kb
from .session import Session, SessionStore, new_session_id


def load_default_kbs() -> KbCatalog:
    """The packaged demo knowledge bases."""
    data_dir = resources.files("cop") / "data"
    catalog = KbCatalog()
    for kind, filename in (
        ("platform", "platform_kb.json"),
        ("function", "function_kb.json"),
        ("dataset", "dataset_kb.json"),
    ):
        with resources.as_file(data_dir / filename) as path:
            setattr(catalog, kind, load_kb(path, kind))
    return catalog


def load_kb_dir(directory: str | Path) -> KbCatalog:
    """Load <kind>_kb.json files from a directory; absent kinds stay None."""
    directory = Path(directory)
    catalog = KbCatalog()
    for kind in KB_KINDS:
        path = directory / f"{kind}_kb.json"
        if path.exists():
            setattr(catalog, kind, load_kb(path, kind))
    return catalog


class CopService:
    """Session registry plus the shared immutable resources."""

    def __init__(
        self,
        backend: ChatBackend | None = None,
        kbs: KbCatalog | None = None,
        config: RunConfig | None = None,
        sessions_dir: str | Path | None = None,
        clock_factory: Callable[[], Clock] = SystemClock,
        id_factory: Callable[[], str] = new_session_id,
    ):
        self.backend = backend
        self.kbs = kbs or KbCatalog()
        self.config = config or RunConfig()
        self.store = SessionStore(sessions_dir) if sessions_dir else None
        self.clock_factory = clock_factory
        self.id_factory = id_factory
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _register(self, session: Session) -> None:
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.Lock()

    def _get(self, session_id: str) -> tuple[Session, threading.Lock]:
        with self._registry_lock:
            session = self._sessions.get(session_id)
            if session is not None:
                return session, self._locks[session_id]
        if self.store is not None and self.store.exists(session_id):
            session = self.store.load(session_id)
            session.backend = self.backend
            session.kbs = self.kbs
            persisted = len(session.events)

            def persist_new(event, sid=session.id, skip=persisted):
                # Events up to `skip` are already on disk from the
                # previous process; only append what replay produced.
                if event.seq > skip:
                    self.store.append(sid, event)

            session.on_event(persist_new)
            self._register(session)
            return self._get(session_id)
        raise UnknownSession(f"unknown session: {session_id}")

    def create_session(
        self, requirement_text: str, config: RunConfig | None = None
    ) -> Session:
        if self.backend is None:
            raise BackendUnavailable("service has no chat backend configured")
        session = Session(
            requirement_text=requirement_text,
            config=config or self.config,
            backend=self.backend,
            kbs=self.kbs,
            clock=self.clock_factory(),
            session_id=self.id_factory(),
        )
        if self.store is not None:
            session.on_event(lambda event: self.store.append(session.id, event))
        self._register(session)
        with self._locks[session.id]:
            try:
                session.start()
            except CopError:
                pass  # recorded on the session; view carries the failure
        return session

    def post_answers(self, session_id: str, answers: dict[str, str]) -> Session:
        session, lock = self._get(session_id)
        with lock:
            try:
                session.answer(answers)
            except (WrongPhase, UnknownElement, EmptyAnswer):
                raise
            except CopError:
                pass
        return session

    def post_feedback(self, session_id: str, fb: DebugFeedback) -> Session:
        session, lock = self._get(session_id)
        with lock:
            try:
                session.feedback(fb)
            except (WrongPhase, InvalidFeedback):
                raise
            except CopError:
                pass
        return session

    def get_session(self, session_id: str) -> Session:
        session, _ = self._get(session_id)
        return session


def _parse_run_config(data: dict[str, Any] | None, base: RunConfig) -> RunConfig:
    if not data:
        return base
    ablation = data.get("ablation", {})
    return RunConfig(
        ablation=AblationConfig(
            pool=bool(ablation.get("pool", base.ablation.pool)),
            retrieval=bool(ablation.get("retrieval", base.ablation.retrieval)),
            feedback=bool(ablation.get("feedback", base.ablation.feedback)),
            max_debug_iterations=int(
                ablation.get("max_debug_iterations", base.ablation.max_debug_iterations)
            ),
        ),
        k_per_kb=int(data.get("k_per_kb", base.k_per_kb)),
        max_clarification_rounds=int(
            data.get("max_clarification_rounds", base.max_clarification_rounds)
        ),
        max_reasks=int(data.get("max_reasks", base.max_reasks)),
        temperature_structured=base.temperature_structured,
        temperature_code=base.temperature_code,
        max_tokens=base.max_tokens,
        max_design_modules=base.max_design_modules,
    )


def create_app(service: CopService, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="cop", docs_url=None, redoc_url=None)

    @app.post("/api/tasks")
    def create_task(payload: dict = Body(...)) -> dict:
        text = payload.get("requirement_text")
        if not isinstance(text, str) or not text.strip():
            raise HTTPException(400, "requirement_text must be a non-empty string")
        config_data = payload.get("config")
        if config_data is not None and not isinstance(config_data, dict):
            raise HTTPException(400, "config must be an object")
        try:
            config = _parse_run_config(config_data, service.config)
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, f"bad config: {exc}")
        try:
            session = service.create_session(text, config)
        except BackendUnavailable as exc:
            raise HTTPException(503, str(exc))
        return session.view()

    @app.post("/api/tasks/{session_id}/answers")
    def post_answers(session_id: str, payload: dict = Body(...)) -> dict:
        answers = payload.get("answers")
        if not isinstance(answers, dict) or not answers:
            raise HTTPException(400, "answers must be a non-empty object")
        try:
            session = service.post_answers(session_id, answers)
        except UnknownSession as exc:
            raise HTTPException(404, str(exc))
        except WrongPhase as exc:
            raise HTTPException(409, str(exc))
        except (UnknownElement, EmptyAnswer) as exc:
            raise HTTPException(400, str(exc))
        return session.view()

    @app.post("/api/tasks/{session_id}/feedback")
    def post_feedback(session_id: str, payload: dict = Body(...)) -> dict:
        if "executable" not in payload or not isinstance(payload["executable"], bool):
            raise HTTPException(400, "executable must be a boolean")
        correct = payload.get("correct", False)
        if not isinstance(correct, bool):
            raise HTTPException(400, "correct must be a boolean")
        fb = DebugFeedback(
            executable=payload["executable"],
            correct=correct,
            error_text=payload.get("error_text"),
            observed_output=payload.get("observed_output"),
        )
        try:
            session = service.post_feedback(session_id, fb)
        except UnknownSession as exc:
            raise HTTPException(404, str(exc))
        except WrongPhase as exc:
            raise HTTPException(409, str(exc))
        except InvalidFeedback as exc:
            raise HTTPException(400, str(exc))
        return session.view()

    @app.get("/api/tasks/{session_id}")
    def get_task(session_id: str) -> dict:
        try:
            session = service.get_session(session_id)
        except UnknownSession as exc:
            raise HTTPException(404, str(exc))
        return {
            "session_id": session.id,
            "phase": session.phase.value,
            "event_count": len(session.events),
        }

    @app.get("/api/tasks/{session_id}/artifacts")
    def get_artifacts(session_id: str) -> dict:
        try:
            session = service.get_session(session_id)
        except UnknownSession as exc:
            raise HTTPException(404, str(exc))
        return session.artifacts_view()

    @app.get("/api/kb/{kind}/search")
    def kb_search(
        kind: str,
        q: str = Query(default=""),
        platform: str | None = Query(default=None),
        language: str | None = Query(default=None),
        k: int = Query(default=5),
    ) -> dict:
        if kind not in KB_KINDS:
            raise HTTPException(400, f"unknown kb kind: {kind}")
        index = service.kbs.get(kind)
        if index is None:
            raise HTTPException(404, f"no {kind} knowledge base loaded")
        if k < 1:
            raise HTTPException(400, "k must be >= 1")
        filters = {}
        if platform:
            filters["platform"] = platform
        if language:
            filters["language"] = language
        hits = index.search(q, filters=filters or None, k=k)
        return {"hits": [hit.to_jsonable() for hit in hits]}

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")
    return app
