"""Chain-of-Programming: a staged, human-in-the-loop pipeline that
turns free-text geospatial requirements into annotated, runnable code
via requirement analysis, algorithm design, code implementation, a
feedback-driven debug loop, and annotation."""

from .clock import Clock, FixedClock, SystemClock
from .config import AblationConfig, RunConfig
from .documents import (
    AlgorithmDesignDocument,
    AlgorithmModule,
    RequirementsDocument,
)
from .pool import ArtifactKind, InfoPool, PoolEntry
from .kb import (
    DatasetRecord,
    FunctionRecord,
    KbCatalog,
    KbIndex,
    PlatformRecord,
    RetrievalHit,
    load_kb,
)
from .backend import (
    ChatMessage,
    CompletionRequest,
    HttpChatBackend,
    RecordingBackend,
    ScriptedBackend,
    ScriptedRule,
    complete_json,
)
from .debugging import AnnotatedCode, DebugFeedback, DebugSession, DebugState
from .implementation import CodeArtifact, PromptContext
from .session import Phase, Session, SessionEvent, SessionStore, replay
from .evaluation import (
    EvalTask,
    MetricReport,
    Verdict,
    load_corpus,
    run_ablation,
    run_debug_sweep,
    score_accuracy,
    score_executability,
    score_matchability,
    score_readability,
)

__version__ = "0.1.0"

__all__ = [
    "AblationConfig",
    "AlgorithmDesignDocument",
    "AlgorithmModule",
    "AnnotatedCode",
    "ArtifactKind",
    "ChatMessage",
    "Clock",
    "CodeArtifact",
    "CompletionRequest",
    "DatasetRecord",
    "DebugFeedback",
    "DebugSession",
    "DebugState",
    "EvalTask",
    "FixedClock",
    "FunctionRecord",
    "HttpChatBackend",
    "InfoPool",
    "KbCatalog",
    "KbIndex",
    "MetricReport",
    "Phase",
    "PlatformRecord",
    "PoolEntry",
    "PromptContext",
    "RecordingBackend",
    "RequirementsDocument",
    "RetrievalHit",
    "RunConfig",
    "ScriptedBackend",
    "ScriptedRule",
    "Session",
    "SessionEvent",
    "SessionStore",
    "SystemClock",
    "Verdict",
    "complete_json",
    "load_corpus",
    "load_kb",
    "replay",
    "run_ablation",
    "run_debug_sweep",
    "score_accuracy",
    "score_executability",
    "score_matchability",
    "score_readability",
]
