"""Stage 3: code implementation.

Builds the generation context from the pool plus KB retrieval, calls
the backend with the code template, and stores the first code revision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .backend import ChatBackend, ChatMessage, CompletionRequest, strip_code_fences
from .config import AblationConfig, RunConfig
from .documents import AlgorithmDesignDocument, RequirementsDocument
from .errors import EmptyCode, MissingArtifact
from .kb import KbCatalog, RetrievalHit
from .pool import ArtifactKind, InfoPool
from . import prompts

# Line prefixes of rendered KB snippets; retrieval-off prompts must
# contain none of these.
SNIPPET_PREFIXES = ("PLATFORM ", "FUNCTION ", "DATASET ")

PROVENANCE_GENERATED = "generated"
PROVENANCE_REPAIRED = "repaired"


@dataclass(frozen=True)
class SupportHits:
    platform_hits: list[RetrievalHit] = field(default_factory=list)
    dataset_hits: list[RetrievalHit] = field(default_factory=list)
    function_hits: list[RetrievalHit] = field(default_factory=list)


@dataclass(frozen=True)
class PromptContext:
    requirements: RequirementsDocument
    design: AlgorithmDesignDocument
    kb_snippets: tuple[str, ...]
    ablation: AblationConfig


@dataclass(frozen=True)
class CodeArtifact:
    language: str
    platform: str
    source: str
    revision: int
    provenance: str  # generated | repaired


def retrieve_support(
    req: RequirementsDocument,
    design: AlgorithmDesignDocument,
    kbs: KbCatalog,
    k_per_kb: int = 5,
) -> SupportHits:
    """Deterministic KB lookups for one task.

    The query is the analysis goal plus methodology plus every module
    name; function and dataset searches are filtered to the document's
    platform and language, the platform KB is searched by platform name.
    Missing KB kinds simply yield empty lists.
    """
    query_parts = [req.analysis_goal]
    methodology = req.get("analysis_methodology")
    if methodology:
        query_parts.append(methodology)
    query_parts.extend(design.module_names())
    query = " ".join(query_parts)
    filters = {"platform": req.platform, "language": req.language}

    platform_hits: list[RetrievalHit] = []
    dataset_hits: list[RetrievalHit] = []
    function_hits: list[RetrievalHit] = []
    if kbs.platform is not None:
        platform_hits = kbs.platform.search(req.platform, k=k_per_kb)
    if kbs.dataset is not None:
        dataset_hits = kbs.dataset.search(query, filters=filters, k=k_per_kb)
    if kbs.function is not None:
        function_hits = kbs.function.search(query, filters=filters, k=k_per_kb)
    return SupportHits(
        platform_hits=platform_hits,
        dataset_hits=dataset_hits,
        function_hits=function_hits,
    )


def assemble_context(
    req: RequirementsDocument | None,
    design: AlgorithmDesignDocument | None,
    hits: SupportHits,
    config: AblationConfig,
    pool: InfoPool | None = None,
) -> PromptContext:
    """Render the generation context.

    Documents may be passed directly or resolved from the pool; snippets
    are ordered platform, dataset, function, then by score within each
    kind, and are forced empty when retrieval is toggled off.
    """
    if req is None and pool is not None:
        entry = pool.get(ArtifactKind.REQUIREMENTS_DOC)
        if entry is not None:
            req = RequirementsDocument.from_json(entry.payload)
    if design is None and pool is not None:
        entry = pool.get(ArtifactKind.ALGORITHM_DESIGN)
        if entry is not None:
            design = AlgorithmDesignDocument.from_json(entry.payload)
    if req is None:
        raise MissingArtifact("requirements document unavailable")
    if design is None:
        raise MissingArtifact("algorithm design document unavailable")
    if config.retrieval:
        snippets = tuple(
            hit.snippet
            for group in (hits.platform_hits, hits.dataset_hits, hits.function_hits)
            for hit in group
        )
    else:
        snippets = ()
    return PromptContext(
        requirements=req, design=design, kb_snippets=snippets, ablation=config
    )


def render_code_prompt(context: PromptContext) -> str:
    """The exact user message the generation call sends.

    With the pool off the stage sees only its immediate predecessor:
    the design document (and snippets, if retrieval is on).
    """
    req_json = context.requirements.to_json() if context.ablation.pool else None
    return prompts.code_user(
        req_json, context.design.to_json(), list(context.kb_snippets)
    )


def generate(
    context: PromptContext,
    backend: ChatBackend,
    pool: InfoPool | None = None,
    config: RunConfig | None = None,
) -> CodeArtifact:
    """Produce code revision 0 from the assembled context."""
    config = config or RunConfig()
    request = CompletionRequest(
        messages=(
            ChatMessage("system", prompts.CODE_SYSTEM),
            ChatMessage("user", render_code_prompt(context)),
        ),
        stage_tag="code_implementation",
        temperature=config.temperature_code,
        max_tokens=config.max_tokens,
    )
    source = strip_code_fences(backend.complete(request))
    if not source.strip():
        raise EmptyCode("generation produced no code")
    revision = 0
    if pool is not None:
        entry = pool.put(ArtifactKind.CODE_DRAFT, source)
        revision = entry.revision
    return CodeArtifact(
        language=context.requirements.language,
        platform=context.requirements.platform,
        source=source,
        revision=revision,
        provenance=PROVENANCE_GENERATED,
    )
