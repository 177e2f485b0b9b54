"""Stage 2: algorithm design.

Turns the requirements document into an ordered multi-module workflow
and validates it structurally before it may enter the pool. Whether a
module really does a single thing is not machine-checkable; that part
lives in the prompt template.
"""

from __future__ import annotations

from .backend import ChatBackend, ChatMessage, CompletionRequest, complete_json
from .config import RunConfig
from .documents import (
    AlgorithmDesignDocument,
    RequirementsDocument,
    validate_design_doc,
)
from .errors import DesignInvalid, MissingArtifact
from .pool import ArtifactKind, InfoPool
from . import prompts


def validate_design(document: dict, max_modules: int = 20) -> list[str]:
    """Empty list iff the document satisfies every structural invariant."""
    return validate_design_doc(document, max_modules=max_modules)


def design(
    req: RequirementsDocument,
    backend: ChatBackend,
    pool: InfoPool | None = None,
    config: RunConfig | None = None,
) -> AlgorithmDesignDocument:
    """One backend call with the design template; invalid documents are
    rejected before they can reach the pool."""
    config = config or RunConfig()
    if pool is not None:
        entry = pool.get(ArtifactKind.REQUIREMENTS_DOC)
        if entry is None:
            raise MissingArtifact("no requirements document in the pool")
        if entry.payload != req.to_json():
            raise MissingArtifact(
                "pool requirements document does not match the one passed in"
            )
    request = CompletionRequest(
        messages=(
            ChatMessage("system", prompts.DESIGN_SYSTEM),
            ChatMessage("user", prompts.design_user(req.to_json())),
        ),
        stage_tag="algorithm_design",
        temperature=config.temperature_structured,
        max_tokens=config.max_tokens,
    )
    # complete_json re-asks only for parse-shape failures; rule
    # violations in a well-shaped document are final.
    result = complete_json(backend, request, "algorithm-design", config.max_reasks)
    violations = validate_design(result.document, config.max_design_modules)
    if violations:
        raise DesignInvalid(violations[0], violations)
    document = AlgorithmDesignDocument.from_json(result.document)
    if pool is not None:
        pool.put(ArtifactKind.ALGORITHM_DESIGN, document.to_json())
    return document
