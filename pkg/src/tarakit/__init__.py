"""Rule-based ISO 21434 risk assessment with incremental maintenance."""

from importlib.resources import files

from .dsl import (
    ArityError,
    Delta,
    DslError,
    DslSyntaxError,
    Fact,
    UnknownFunctorError,
    parse_delta,
    parse_model,
    serialize_model,
)
from .gsn import GsnGraph, build_gsn, export_gsn_dot
from .incremental import (
    Assessment,
    ChangeSet,
    DeltaError,
    StaleAssessmentError,
    apply_delta,
    assess,
    diff_assessments,
    incremental_assess,
)
from .model import Model, ModelValidationError, connectivity_graph, validate_model
from .rating import (
    FeasibilityLevel,
    ImpactMode,
    TreatmentOption,
    aggregate_path_feasibility,
    determine_risks,
    risk_from_matrix,
    score_step,
    step_feasibility,
    suggest_treatment,
)
from .recommend import (
    Solution,
    UncoverableThreatError,
    apply_solution,
    candidate_placements,
    recommend_solutions,
)
from .report import Report, build_report, export_report_json, render_risk_table
from .threats import (
    Threat,
    derive_mitigations,
    derive_potential_threats,
    derive_threats,
    enumerate_attack_paths,
)

__version__ = "0.1.0"


def fixture_text(name: str) -> str:
    """Text of a bundled fixture, e.g. ``headlamp.dsl`` or ``increment.dsl``."""
    return files(__package__).joinpath("fixtures", name).read_text(encoding="utf-8")


def fixture_path(name: str) -> str:
    return str(files(__package__).joinpath("fixtures", name))
