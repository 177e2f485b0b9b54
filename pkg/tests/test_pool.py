from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from cop.clock import FixedClock
from cop.errors import SchemaViolation
from cop.pool import ArtifactKind, InfoPool

VALID_REQ_DOC = {
    "document_type": "User Requirements Document",
    "requirements": {
        "Platform": "Google Earth Engine",
        "Programming_Language": "JavaScript",
        "Analysis_Goal": "Clip Landsat imagery to the Brazilian region.",
        "Spatial_Extent": "Brazil",
        "Temporal_Extent": "Year 2021",
        "Data_Source_and_Format": "Landsat imagery",
        "Analysis_Methodology": "Image clipping",
        "Output_Format": "GeoTIFF",
    },
}

VALID_DESIGN_DOC = {
    "Document_Type": "Algorithm Design Document",
    "Algorithm": [
        {
            "Module_Sequence": 1,
            "Module_Name": "Data Acquisition",
            "Module_Description": "Load imagery",
            "Input": "Asset path",
            "Output": "ImageCollection",
            "Implementation_Details": "Filter the public catalog",
        }
    ],
}


def make_pool() -> InfoPool:
    return InfoPool(clock=FixedClock())


def test_put_then_get_returns_same_document():
    pool = make_pool()
    pool.put(ArtifactKind.REQUIREMENTS_DOC, VALID_REQ_DOC)
    entry = pool.get(ArtifactKind.REQUIREMENTS_DOC)
    assert entry is not None
    assert entry.payload == VALID_REQ_DOC
    assert entry.revision == 0


def test_code_draft_revisions_count_up_from_zero():
    pool = make_pool()
    first = pool.put(ArtifactKind.CODE_DRAFT, "v0")
    second = pool.put(ArtifactKind.CODE_DRAFT, "v1")
    assert (first.revision, second.revision) == (0, 1)
    entry = pool.get(ArtifactKind.CODE_DRAFT)
    assert entry is not None and entry.payload == "v1"


def test_put_design_missing_module_name_is_rejected():
    bad = {
        "Document_Type": "Algorithm Design Document",
        "Algorithm": [
            {
                "Module_Sequence": 1,
                "Module_Description": "Load imagery",
                "Input": "Asset path",
                "Output": "ImageCollection",
                "Implementation_Details": "Filter the catalog",
            }
        ],
    }
    pool = make_pool()
    with pytest.raises(SchemaViolation) as excinfo:
        pool.put(ArtifactKind.ALGORITHM_DESIGN, bad)
    assert any("Module_Name" in v for v in excinfo.value.violations)


def test_get_on_empty_pool_is_absent():
    pool = make_pool()
    assert pool.get(ArtifactKind.REQUIREMENTS_DOC) is None


def test_get_is_idempotent():
    pool = make_pool()
    pool.put(ArtifactKind.CODE_DRAFT, "v0")
    assert pool.get(ArtifactKind.CODE_DRAFT) == pool.get(ArtifactKind.CODE_DRAFT)


def _populate_all_kinds(pool: InfoPool) -> None:
    pool.put(ArtifactKind.REQUIREMENTS_DOC, VALID_REQ_DOC)
    pool.put(ArtifactKind.ALGORITHM_DESIGN, VALID_DESIGN_DOC)
    pool.put(ArtifactKind.CODE_DRAFT, "code")
    pool.put(ArtifactKind.DEBUG_TRANSCRIPT, [{"iteration": 0}])
    pool.put(ArtifactKind.ANNOTATED_CODE, "// header\ncode")


def test_clear_wipes_every_kind_and_resets_revisions():
    pool = make_pool()
    _populate_all_kinds(pool)
    pool.clear()
    for kind in ArtifactKind:
        assert pool.get(kind) is None
    assert pool.put(ArtifactKind.CODE_DRAFT, "fresh").revision == 0


def test_clear_on_empty_pool_is_a_noop():
    pool = make_pool()
    pool.clear()
    assert pool.snapshot() == []


def test_snapshot_empty_pool_is_empty_list():
    assert make_pool().snapshot() == []


def test_snapshot_orders_kinds_and_expands_code_history():
    pool = make_pool()
    pool.put(ArtifactKind.CODE_DRAFT, "v0")
    pool.put(ArtifactKind.CODE_DRAFT, "v1")
    pool.put(ArtifactKind.REQUIREMENTS_DOC, VALID_REQ_DOC)
    snapshot = pool.snapshot()
    assert [e.kind for e in snapshot] == [
        ArtifactKind.REQUIREMENTS_DOC,
        ArtifactKind.CODE_DRAFT,
        ArtifactKind.CODE_DRAFT,
    ]
    assert [e.revision for e in snapshot] == [0, 0, 1]


def test_snapshot_is_a_pure_read():
    pool = make_pool()
    _populate_all_kinds(pool)
    assert pool.snapshot() == pool.snapshot()


def test_wrong_payload_shape_fails_fast():
    pool = make_pool()
    with pytest.raises(SchemaViolation):
        pool.put(ArtifactKind.CODE_DRAFT, {"not": "text"})
    with pytest.raises(SchemaViolation):
        pool.put(ArtifactKind.DEBUG_TRANSCRIPT, "not a list")


@given(st.integers(min_value=1, max_value=12))
def test_code_revisions_are_exactly_0_to_n_minus_1(n):
    pool = make_pool()
    for i in range(n):
        pool.put(ArtifactKind.CODE_DRAFT, f"v{i}")
    assert [e.revision for e in pool.code_revisions()] == list(range(n))


@given(st.permutations([
    ArtifactKind.REQUIREMENTS_DOC,
    ArtifactKind.ALGORITHM_DESIGN,
    ArtifactKind.CODE_DRAFT,
    ArtifactKind.DEBUG_TRANSCRIPT,
    ArtifactKind.ANNOTATED_CODE,
]))
def test_snapshot_order_is_independent_of_insertion_order(order):
    payloads = {
        ArtifactKind.REQUIREMENTS_DOC: VALID_REQ_DOC,
        ArtifactKind.ALGORITHM_DESIGN: VALID_DESIGN_DOC,
        ArtifactKind.CODE_DRAFT: "code",
        ArtifactKind.DEBUG_TRANSCRIPT: [],
        ArtifactKind.ANNOTATED_CODE: "// x",
    }
    pool = make_pool()
    for kind in order:
        pool.put(kind, payloads[kind])
    assert [e.kind for e in pool.snapshot()] == list(ArtifactKind)
