"""Attack-potential scoring, feasibility levels and the risk matrix."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

from .model import (
    Equipment,
    Expertise,
    ImpactLevel,
    ImpactVector,
    Knowledge,
    Model,
    Opportunity,
    StepRating,
)

if TYPE_CHECKING:
    from .threats import Threat


class FeasibilityLevel(str, Enum):
    VERY_LOW = "veryLow"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return _FEAS_ORDER.index(self)


_FEAS_ORDER = (
    FeasibilityLevel.VERY_LOW,
    FeasibilityLevel.LOW,
    FeasibilityLevel.MEDIUM,
    FeasibilityLevel.HIGH,
)


class TreatmentOption(str, Enum):
    AVOID = "avoid"
    REDUCE = "reduce"
    SHARE = "share"
    ACCEPT = "accept"


class ImpactMode(str, Enum):
    SAFETY = "safety"
    MAX = "max"


EXPERTISE_POINTS = {
    Expertise.LAYMAN: 0,
    Expertise.PROFICIENT: 3,
    Expertise.EXPERT: 6,
    Expertise.MULTIPLE_EXPERTS: 8,
}
EQUIPMENT_POINTS = {
    Equipment.STANDARD: 0,
    Equipment.SPECIALIZED: 4,
    Equipment.BESPOKE: 7,
    Equipment.MULTIPLE_BESPOKE: 9,
}
KNOWLEDGE_POINTS = {
    Knowledge.PUBLIC: 0,
    Knowledge.RESTRICTED: 3,
    Knowledge.CONFIDENTIAL: 7,
    Knowledge.STRICTLY_CONFIDENTIAL: 11,
}
OPPORTUNITY_POINTS = {
    Opportunity.UNLIMITED: 0,
    Opportunity.EASY: 1,
    Opportunity.MODERATE: 4,
    Opportunity.DIFFICULT: 10,
}
# (upper bound in days, points); anything longer scores TIME_POINTS_MAX
TIME_BANDS = ((1, 0), (7, 1), (14, 2), (30, 4), (60, 7), (90, 10), (180, 17))
TIME_POINTS_MAX = 19

# rows: impact, columns: veryLow, low, medium, high
RISK_MATRIX = {
    ImpactLevel.NEG: (1, 1, 1, 1),
    ImpactLevel.MOD: (1, 1, 2, 3),
    ImpactLevel.MAJ: (1, 2, 3, 4),
    ImpactLevel.SEV: (2, 3, 4, 5),
}


def time_points(days: int) -> int:
    for bound, pts in TIME_BANDS:
        if days <= bound:
            return pts
    return TIME_POINTS_MAX


def score_step(r: StepRating) -> int:
    return (
        EXPERTISE_POINTS[r.expertise]
        + time_points(r.elapsed_time_days)
        + EQUIPMENT_POINTS[r.equipment]
        + KNOWLEDGE_POINTS[r.knowledge]
        + OPPORTUNITY_POINTS[r.opportunity]
    )


def step_feasibility(score: int) -> FeasibilityLevel:
    if score < 0:
        raise ValueError(f"attack potential must be non-negative, got {score}")
    if score <= 13:
        return FeasibilityLevel.HIGH
    if score <= 19:
        return FeasibilityLevel.MEDIUM
    if score <= 24:
        return FeasibilityLevel.LOW
    return FeasibilityLevel.VERY_LOW


def composite_step(steps: Sequence[StepRating]) -> StepRating:
    """Most demanding value of each factor across ``steps``."""
    if not steps:
        raise ValueError("no steps")
    return StepRating(
        expertise=max((s.expertise for s in steps), key=EXPERTISE_POINTS.__getitem__),
        elapsed_time_days=max(s.elapsed_time_days for s in steps),
        equipment=max((s.equipment for s in steps), key=EQUIPMENT_POINTS.__getitem__),
        knowledge=max((s.knowledge for s in steps), key=KNOWLEDGE_POINTS.__getitem__),
        opportunity=max((s.opportunity for s in steps), key=OPPORTUNITY_POINTS.__getitem__),
    )


def aggregate_path_feasibility(steps: Sequence[StepRating]) -> FeasibilityLevel:
    return step_feasibility(score_step(composite_step(steps)))


def risk_from_matrix(impact: ImpactLevel, feas: FeasibilityLevel) -> int:
    return RISK_MATRIX[ImpactLevel(impact)][FeasibilityLevel(feas).rank]


def select_impact(impact: ImpactVector, mode: ImpactMode | str) -> ImpactLevel:
    """Impact level a threat is rated with.

    Safety mode uses the safety category alone. Max mode takes the category
    giving the largest matrix value; the matrix is monotone in impact, so that
    is the largest level of the four.
    """
    if ImpactMode(mode) is ImpactMode.SAFETY:
        return impact.safety
    return max(impact.as_tuple(), key=lambda lvl: lvl.rank)


def suggest_treatment(risk: int) -> TreatmentOption:
    if not 1 <= risk <= 5:
        raise ValueError(f"risk value out of range: {risk}")
    if risk == 1:
        return TreatmentOption.ACCEPT
    if risk == 5:
        return TreatmentOption.AVOID
    return TreatmentOption.REDUCE


def treatment_alternatives(risk: int) -> tuple[TreatmentOption, ...]:
    """Options worth flagging besides the suggested one."""
    return (TreatmentOption.SHARE,) if risk == 4 else ()


@dataclass(frozen=True)
class RatedThreat:
    threat: Threat
    feasibility: FeasibilityLevel
    risk: int
    treatment: TreatmentOption


def path_steps(path: Sequence[str], channel_ids: frozenset[str]) -> list[str]:
    """Components an attacker must compromise, ordered entry to asset."""
    return [e for e in reversed(path) if e not in channel_ids]


def threat_steps(m: Model, threat: Threat) -> list[StepRating]:
    entry = threat.path[-1]
    steps = path_steps(threat.path, m.channel_ids)
    default = StepRating()
    return [
        m.step_ratings.get((threat.asset, threat.property, entry, i), default)
        for i in range(1, len(steps) + 1)
    ]


def determine_risks(m: Model, threats: Iterable[Threat]) -> list[RatedThreat]:
    """Feasibility, risk value and suggested treatment for each threat.

    Unrated steps fall back to the all-minimum rating, so a missing rating
    can only make a path look easier.
    """
    out = []
    for t in threats:
        feas = aggregate_path_feasibility(threat_steps(m, t))
        risk = risk_from_matrix(t.impact_used, feas)
        out.append(RatedThreat(t, feas, risk, suggest_treatment(risk)))
    return out
