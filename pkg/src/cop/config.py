"""Run configuration: mechanism toggles and per-stage knobs."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any


@dataclass(frozen=True)
class AblationConfig:
    """Independently toggleable pipeline mechanisms.

    ``pool=False`` restricts every stage prompt to its immediate
    predecessor's output; ``retrieval=False`` forces empty KB snippet
    lists; ``feedback=False`` skips the debug loop entirely so the code
    goes straight to annotation with exactly one revision.
    """

    pool: bool = True
    retrieval: bool = True
    feedback: bool = True
    max_debug_iterations: int = 3

    def __post_init__(self):
        if self.max_debug_iterations < 0:
            raise ValueError("max_debug_iterations must be >= 0")

    def key(self) -> tuple[bool, bool, bool]:
        return (self.pool, self.retrieval, self.feedback)


@dataclass(frozen=True)
class RunConfig:
    """Everything a session needs besides the backend and the KBs."""

    ablation: AblationConfig = field(default_factory=AblationConfig)
    k_per_kb: int = 5
    max_clarification_rounds: int = 5
    max_reasks: int = 2
    # Structured stages want reproducible parses; code stages get a
    # little freedom. Both are overridable here.
    temperature_structured: float = 0.0
    temperature_code: float = 0.2
    max_tokens: int = 4096
    max_design_modules: int = 20

    def to_jsonable(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_jsonable(cls, data: dict[str, Any]) -> "RunConfig":
        data = dict(data)
        ablation = data.pop("ablation", {})
        return cls(ablation=AblationConfig(**ablation), **data)
