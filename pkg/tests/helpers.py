"""Shared scripted-session helpers for the test suite."""

from __future__ import annotations

from cop.clock import FixedClock
from cop.config import RunConfig
from cop.debugging import DebugFeedback
from cop.evaluation import EvalTask
from cop.kb import KbCatalog
from cop.session import Phase, Session
from cop.simulate import make_backend

FAIL_N = DebugFeedback(executable=False, error_text="ReferenceError: x is not defined")
FAIL_YN = DebugFeedback(executable=True, correct=False, observed_output="wrong area")
PASS_YY = DebugFeedback(executable=True, correct=True)


def make_session(
    task: EvalTask,
    kbs: KbCatalog | None = None,
    config: RunConfig | None = None,
    session_id: str | None = None,
    max_repairs: int = 8,
    omit_elements: tuple[str, ...] = (),
) -> Session:
    return Session(
        requirement_text=task.requirement_text,
        config=config or RunConfig(),
        backend=make_backend(task, max_repairs=max_repairs, omit_elements=omit_elements),
        kbs=kbs or KbCatalog(),
        clock=FixedClock(),
        session_id=session_id or f"fixed-{task.id}",
    )


def run_session(
    task: EvalTask,
    kbs: KbCatalog | None = None,
    config: RunConfig | None = None,
    feedback_sequence: list[DebugFeedback] | None = None,
    session_id: str | None = None,
) -> Session:
    """Start a session and push a feedback sequence until it leaves
    AwaitingFeedback (or the sequence is spent)."""
    session = make_session(task, kbs=kbs, config=config, session_id=session_id)
    session.start()
    remaining = list(feedback_sequence or [])
    while session.phase is Phase.AWAITING_FEEDBACK and remaining:
        session.feedback(remaining.pop(0))
    return session
