from __future__ import annotations

import json

import pytest

from cop.backend import ScriptedBackend, ScriptedRule
from cop.clock import FixedClock
from cop.design import design, validate_design
from cop.documents import AlgorithmDesignDocument, RequirementsDocument
from cop.errors import DesignInvalid, MissingArtifact
from cop.pool import ArtifactKind, InfoPool

REQ = RequirementsDocument(
    elements={
        "platform": "Google Earth Engine",
        "programming_language": "JavaScript",
        "analysis_goal": "Track land use change for a city",
        "data_source_and_format": "Land use GeoJSON",
        "analysis_methodology": "Change detection",
        "output_format": "Report",
    }
)

# The five-module land-use exemplar shape: sequential modules, each with
# a single responsibility and explicit input/output.
LAND_USE_DESIGN = {
    "Document_Type": "Algorithm Design Document",
    "Algorithm": [
        {
            "Module_Sequence": 1,
            "Module_Name": "Data Acquisition",
            "Module_Description": "Retrieve land use data for a specified city and time period.",
            "Input": "City name, time range",
            "Output": "Geospatial dataset containing land use information",
            "Implementation_Details": "Access API or database to obtain GeoJSON files",
        },
        {
            "Module_Sequence": 2,
            "Module_Name": "Data Cleaning and Preprocessing",
            "Module_Description": "Clean and standardize data to ensure usability",
            "Input": "Acquired geospatial dataset",
            "Output": "Cleaned dataset with uniform format",
            "Implementation_Details": "Validate and convert data format; handle missing values",
        },
        {
            "Module_Sequence": 3,
            "Module_Name": "Spatial Analysis (Area Calculation)",
            "Module_Description": "Calculate area for each land type",
            "Input": "Cleaned dataset",
            "Output": "Area statistics for each land type",
            "Implementation_Details": "Use GIS tools to compute area by land type",
        },
        {
            "Module_Sequence": 4,
            "Module_Name": "Temporal Comparison Analysis",
            "Module_Description": "Compare land use data over different time periods",
            "Input": "Area data for initial and target time periods",
            "Output": "Change in area for each land type",
            "Implementation_Details": "Compute change rates and tabulate area changes",
        },
        {
            "Module_Sequence": 5,
            "Module_Name": "Generate Statistical Report",
            "Module_Description": "Compile analysis results into a report",
            "Input": "Area change data",
            "Output": "Statistical report with land use area changes",
            "Implementation_Details": "Render report files with charts and tables",
        },
    ],
}


def design_backend(document: dict) -> ScriptedBackend:
    return ScriptedBackend(
        [ScriptedRule("algorithm_design", "", json.dumps(document))]
    )


def test_design_parses_and_stores_the_five_module_document():
    pool = InfoPool(clock=FixedClock())
    pool.put(ArtifactKind.REQUIREMENTS_DOC, REQ.to_json())
    doc = design(REQ, design_backend(LAND_USE_DESIGN), pool=pool)
    assert len(doc.modules) == 5
    assert doc.modules[0].name == "Data Acquisition"
    entry = pool.get(ArtifactKind.ALGORITHM_DESIGN)
    assert entry is not None and entry.payload == doc.to_json()


def test_non_consecutive_sequences_are_design_invalid():
    bad = {
        "Document_Type": "Algorithm Design Document",
        "Algorithm": [
            dict(LAND_USE_DESIGN["Algorithm"][0], Module_Sequence=1),
            dict(LAND_USE_DESIGN["Algorithm"][1], Module_Sequence=3),
            dict(LAND_USE_DESIGN["Algorithm"][2], Module_Sequence=4),
        ],
    }
    with pytest.raises(DesignInvalid, match="non-consecutive sequence"):
        design(REQ, design_backend(bad))


def test_zero_modules_are_design_invalid():
    bad = {"Document_Type": "Algorithm Design Document", "Algorithm": []}
    with pytest.raises(DesignInvalid, match="empty design"):
        design(REQ, design_backend(bad))


def test_precondition_requires_matching_pool_entry():
    pool = InfoPool(clock=FixedClock())
    with pytest.raises(MissingArtifact):
        design(REQ, design_backend(LAND_USE_DESIGN), pool=pool)


def test_validate_design_accepts_the_exemplar():
    assert validate_design(LAND_USE_DESIGN) == []


def test_validate_design_names_module_and_field():
    doc = {
        "Document_Type": "Algorithm Design Document",
        "Algorithm": [
            LAND_USE_DESIGN["Algorithm"][0],
            dict(LAND_USE_DESIGN["Algorithm"][1], Implementation_Details=""),
        ],
    }
    doc["Algorithm"][0] = dict(doc["Algorithm"][0], Module_Sequence=1)
    doc["Algorithm"][1] = dict(doc["Algorithm"][1], Module_Sequence=2)
    violations = validate_design(doc)
    assert violations == ["module 2: empty Implementation_Details"]


def test_validate_design_enforces_module_count_bound():
    module = LAND_USE_DESIGN["Algorithm"][0]
    doc = {
        "Document_Type": "Algorithm Design Document",
        "Algorithm": [dict(module, Module_Sequence=i + 1) for i in range(21)],
    }
    violations = validate_design(doc)
    assert violations == ["module count > 20"]


def test_valid_document_roundtrips_through_model():
    doc = AlgorithmDesignDocument.from_json(LAND_USE_DESIGN)
    assert validate_design(doc.to_json()) == []
    assert doc.module_names()[0] == "Data Acquisition"


def test_design_never_stores_an_invalid_document():
    pool = InfoPool(clock=FixedClock())
    pool.put(ArtifactKind.REQUIREMENTS_DOC, REQ.to_json())
    bad = {"Document_Type": "Algorithm Design Document", "Algorithm": []}
    with pytest.raises(DesignInvalid):
        design(REQ, design_backend(bad), pool=pool)
    assert pool.get(ArtifactKind.ALGORITHM_DESIGN) is None
