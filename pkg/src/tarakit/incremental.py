"""Full assessment pipeline and its incremental maintenance under deltas.

Incremental re-assessment uses connected-component scoping: an asset's
attack paths, threats, ratings and mitigations depend only on the elements
in its connected component of the incidence graph, plus facts naming the
asset itself. Assets whose component (before or after the delta) contains
a touched element are deleted from the assessment and re-derived; every
other asset's results are kept as they are.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .dsl import (
    Delta,
    Fact,
    conflicting_step_ratings,
    fact_mentions,
    facts_to_model,
    model_to_facts,
    serialize_model,
)
from .model import Model, ModelValidationError, Violation, connectivity_graph, validate_model
from .rating import ImpactMode, RatedThreat, determine_risks
from .threats import (
    AttackPath,
    MitigationFact,
    Threat,
    derive_mitigations,
    derive_threats,
    enumerate_attack_paths,
    path_warnings,
)


class DeltaError(ValueError):
    def __init__(self, op_index: int, message: str):
        self.op_index = op_index
        super().__init__(f"delta op {op_index}: {message}")


class StaleAssessmentError(ValueError):
    pass


@dataclass(frozen=True)
class Assessment:
    model_hash: str
    impact_mode: ImpactMode
    paths: Mapping[str, tuple[AttackPath, ...]] = field(default_factory=dict)
    threats: tuple[Threat, ...] = ()
    ratings: tuple[RatedThreat, ...] = ()
    mitigations: tuple[MitigationFact, ...] = ()
    warnings: tuple[str, ...] = ()

    def rating_of(self, t: Threat) -> RatedThreat:
        return self.ratings[self.threats.index(t)]

    def mitigation_of(self, t: Threat) -> MitigationFact:
        return self.mitigations[self.threats.index(t)]

    def unmitigated(self) -> list[Threat]:
        return [f.threat for f in self.mitigations if not f.mitigated]


@dataclass(frozen=True)
class RiskChange:
    threat: Threat
    old: int
    new: int


@dataclass(frozen=True)
class MitigationChange:
    threat: Threat
    old_by: tuple[str, ...]
    new_by: tuple[str, ...]


@dataclass(frozen=True)
class ChangeSet:
    """Threat-level differences between two assessments.

    A persisting threat whose risk value and mitigation both changed is
    listed under ``risk_changed`` only, keeping the four lists disjoint.
    """

    added_threats: tuple[Threat, ...] = ()
    removed_threats: tuple[Threat, ...] = ()
    risk_changed: tuple[RiskChange, ...] = ()
    mitigation_changed: tuple[MitigationChange, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (self.added_threats or self.removed_threats or self.risk_changed or self.mitigation_changed)


def model_hash(m: Model) -> str:
    return hashlib.sha256(serialize_model(m).encode("utf-8")).hexdigest()


def _rows(threats, ratings, mitigations):
    return sorted(zip(threats, ratings, mitigations), key=lambda r: r[0].sort_key())


def normalize(a: Assessment) -> Assessment:
    rows = _rows(a.threats, a.ratings, a.mitigations)
    return dataclasses.replace(
        a,
        paths={k: tuple(a.paths[k]) for k in sorted(a.paths)},
        threats=tuple(r[0] for r in rows),
        ratings=tuple(r[1] for r in rows),
        mitigations=tuple(r[2] for r in rows),
        warnings=tuple(sorted(a.warnings)),
    )


def _derive(m: Model, mode: ImpactMode, assets: Iterable[str]):
    g = connectivity_graph(m)
    assets = sorted(set(assets) & m.assets)
    paths = {a: enumerate_attack_paths(m, a, g) for a in assets}
    threats = derive_threats(m, mode, paths, assets=assets)
    return paths, threats, determine_risks(m, threats), derive_mitigations(m, threats)


def assess(m: Model, impact_mode: ImpactMode | str = ImpactMode.SAFETY) -> Assessment:
    violations = validate_model(m)
    if violations:
        raise ModelValidationError(violations)
    mode = ImpactMode(impact_mode)
    paths, threats, ratings, mitigations = _derive(m, mode, m.assets)
    return normalize(
        Assessment(
            model_hash=model_hash(m),
            impact_mode=mode,
            paths={k: tuple(v) for k, v in paths.items()},
            threats=tuple(threats),
            ratings=tuple(ratings),
            mitigations=tuple(mitigations),
            warnings=tuple(path_warnings(m)),
        )
    )


# --- deltas ----------------------------------------------------------------

def _references(f: Fact, element: str) -> bool:
    """Whether ``f`` depends on ``element`` existing (channel endpoints excluded)."""
    a = f.args
    if f.functor in ("public", "asset"):
        return a[0] == element
    if f.functor == "dmgScenario":
        return a[1] == element
    if f.functor == "stepRating":
        return element in (a[0], a[2])
    if f.functor == "firewall":
        return element in (a[1], a[2])
    if f.functor in ("secMonCP", "secMonCH"):
        return a[1] == element
    return False


def _cascade(facts: list[Fact], element: str, log: list[str], touched: set[str], op_index: int) -> list[Fact]:
    """Remove everything depending on a deleted component or channel."""
    dropped_channels = []
    out = []
    for f in facts:
        if f.functor == "channel" and element in f.args[1]:
            rest = tuple(e for e in f.args[1] if e != element)
            touched.update(f.args[1])
            touched.add(f.args[0])
            if len(rest) < 2:
                log.append(f"op {op_index}: removed {f} (fewer than 2 endpoints left)")
                dropped_channels.append(f.args[0])
                continue
            nf = Fact("channel", (f.args[0], rest), f.line)
            log.append(f"op {op_index}: rewrote {f} as {nf}")
            out.append(nf)
        elif _references(f, element):
            log.append(f"op {op_index}: removed {f}")
            touched.update(fact_mentions(f))
        else:
            out.append(f)
    for ch in dropped_channels:
        out = _cascade(out, ch, log, touched, op_index)
    return out


def _apply(m: Model, d: Delta) -> tuple[Model, set[str]]:
    facts = model_to_facts(m)
    touched: set[str] = set()
    log: list[str] = []
    for i, (action, fact) in enumerate(d.ops):
        touched |= fact_mentions(fact)
        if action == "add":
            if fact not in facts:
                facts.append(fact)
            continue
        if fact not in facts:
            raise DeltaError(i, f"del of absent fact {fact}")
        facts.remove(fact)
        if fact.functor in ("component", "channel"):
            facts = _cascade(facts, fact.args[0], log, touched, i)

    new = dataclasses.replace(facts_to_model(facts), provenance=tuple(log))
    violations = conflicting_step_ratings(facts) + validate_model(new)
    if violations:
        raise ModelValidationError(violations, _locate_ops(violations, d))
    return new, touched


def _locate_ops(violations: list[Violation], d: Delta) -> list[tuple[int | None, Violation]]:
    located = []
    for v in violations:
        idx = None
        for i, (_, fact) in enumerate(d.ops):
            if v.ident in fact_mentions(fact):
                idx = i
        located.append((idx, v))
    return located


def apply_delta(m: Model, d: Delta) -> Model:
    """Apply ``d`` op by op and validate the result.

    Deleting a component or channel cascades: channels lose the endpoint
    (and disappear below two endpoints), and markings, damage scenarios,
    step ratings and patterns naming the element are removed. The cascade
    is recorded in the result's ``provenance``.
    """
    return _apply(m, d)[0]


# --- incremental maintenance -----------------------------------------------

def affected_assets(old: Model, new: Model, touched: set[str]) -> set[str]:
    g_old, g_new = connectivity_graph(old), connectivity_graph(new)
    out = set()
    for asset in old.assets | new.assets:
        scope = g_old.connected_component(asset) | g_new.connected_component(asset) | {asset}
        if scope & touched:
            out.add(asset)
    return out


def incremental_assess(a: Assessment, m: Model, d: Delta) -> tuple[Assessment, ChangeSet]:
    if a.model_hash != model_hash(m):
        raise StaleAssessmentError("assessment was not computed for this model")
    new_m, touched = _apply(m, d)
    affected = affected_assets(m, new_m, touched)

    paths, threats, ratings, mitigations = _derive(new_m, a.impact_mode, affected)
    kept = [r for r in zip(a.threats, a.ratings, a.mitigations) if r[0].asset not in affected]
    rows = kept + list(zip(threats, ratings, mitigations))
    merged_paths = {k: v for k, v in a.paths.items() if k not in affected}
    merged_paths.update((k, tuple(v)) for k, v in paths.items())

    new_a = normalize(
        Assessment(
            model_hash=model_hash(new_m),
            impact_mode=a.impact_mode,
            paths=merged_paths,
            threats=tuple(r[0] for r in rows),
            ratings=tuple(r[1] for r in rows),
            mitigations=tuple(r[2] for r in rows),
            warnings=tuple(path_warnings(new_m)),
        )
    )
    old_rows = [r for r in zip(a.threats, a.ratings, a.mitigations) if r[0].asset in affected]
    new_rows = list(zip(threats, ratings, mitigations))
    return new_a, _diff_rows(old_rows, new_rows)


def _diff_rows(old_rows, new_rows) -> ChangeSet:
    old = {r[0]: r for r in old_rows}
    new = {r[0]: r for r in new_rows}

    def key(t: Threat):
        return t.sort_key()

    added = sorted((t for t in new if t not in old), key=key)
    removed = sorted((t for t in old if t not in new), key=key)
    risk, mit = [], []
    for t in sorted((t for t in new if t in old), key=key):
        (_, r_old, m_old), (_, r_new, m_new) = old[t], new[t]
        if r_old.risk != r_new.risk:
            risk.append(RiskChange(t, r_old.risk, r_new.risk))
        elif m_old.by != m_new.by:
            mit.append(MitigationChange(t, m_old.by, m_new.by))
    return ChangeSet(tuple(added), tuple(removed), tuple(risk), tuple(mit))


def diff_assessments(old: Assessment, new: Assessment) -> ChangeSet:
    return _diff_rows(
        list(zip(old.threats, old.ratings, old.mitigations)),
        list(zip(new.threats, new.ratings, new.mitigations)),
    )
