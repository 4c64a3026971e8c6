import random

import pytest

from tarakit import parse_delta
from tarakit.dsl import Delta, Fact
from tarakit.incremental import (
    DeltaError,
    StaleAssessmentError,
    apply_delta,
    assess,
    diff_assessments,
    incremental_assess,
    model_hash,
)
from tarakit.model import ModelValidationError, make_model
from tarakit.rating import FeasibilityLevel

from randmodels import random_delta, random_model


def test_assess_headlamp(headlamp):
    a = assess(headlamp)
    assert len(a.threats) == 6
    assert len(a.paths["can2"]) == 3
    assert len(a.unmitigated()) == 6
    assert a.model_hash == model_hash(headlamp)


def test_assess_rejects_invalid_model():
    with pytest.raises(ModelValidationError):
        assess(make_model(["a"], public=["zz"]))


def test_increment_adds_body_control(headlamp, increment):
    m2 = apply_delta(headlamp, increment)
    assert m2.assets == {"can2", "bodyCtrl"}
    assert len(m2.damage_scenarios) == 3


def test_delete_gateway_side_cascades(headlamp):
    m2 = apply_delta(headlamp, parse_delta("del component(nav)."))
    assert "can1" not in m2.channel_ids  # left with only gw
    assert {"btIf", "cellIf"}.isdisjoint(m2.channel_ids)
    assert any("can1" in line for line in m2.provenance)
    a = assess(m2)
    assert {t.entry for t in a.threats} == {"obdConn"}


def test_delete_component_drops_its_ratings(headlamp):
    m2 = apply_delta(headlamp, parse_delta("del component(bt)."))
    assert "bt" not in m2.public
    assert not any(k[2] == "bt" for k in m2.step_ratings)


def test_empty_delta_is_identity(headlamp):
    assert apply_delta(headlamp, Delta(())) == headlamp
    new_a, changes = incremental_assess(assess(headlamp), headlamp, Delta(()))
    assert new_a == assess(headlamp)
    assert changes.is_empty


def test_delete_absent_fact(headlamp):
    with pytest.raises(DeltaError) as exc:
        apply_delta(headlamp, parse_delta("add public(gw).\ndel public(nav)."))
    assert exc.value.op_index == 1


def test_delta_creating_dangling_reference(headlamp):
    with pytest.raises(ModelValidationError) as exc:
        apply_delta(headlamp, parse_delta("add component(x).\nadd asset(ghost)."))
    assert exc.value.located[0][0] == 1


def test_stale_assessment(headlamp, headlamp_fw):
    with pytest.raises(StaleAssessmentError):
        incremental_assess(assess(headlamp), headlamp_fw, Delta(()))


def test_increment_changeset(headlamp_fw, increment):
    a = assess(headlamp_fw)
    new_a, changes = incremental_assess(a, headlamp_fw, increment)
    assert len(changes.added_threats) == 3
    assert {t.asset for t in changes.added_threats} == {"bodyCtrl"}
    assert not changes.removed_threats and not changes.risk_changed and not changes.mitigation_changed
    assert len(new_a.unmitigated()) == 3


def test_risk_change_reported(headlamp):
    # make the obd path very hard to walk in one step
    d = parse_delta("add stepRating(can2, int, obdConn, 1, multipleExperts, 200, multipleBespoke, strictlyConfidential, difficult).")
    a = assess(headlamp)
    new_a, changes = incremental_assess(a, headlamp, d)
    ((rc,),) = [changes.risk_changed]
    assert rc.threat.entry == "obdConn"
    assert (rc.old, rc.new) == (4, 1)
    assert new_a.rating_of(rc.threat).feasibility is FeasibilityLevel.VERY_LOW


def test_mitigation_change_reported(headlamp):
    a = assess(headlamp)
    _, changes = incremental_assess(a, headlamp, parse_delta("add firewall(f, can3, gw)."))
    assert [c.threat.entry for c in changes.mitigation_changed] == ["obdConn", "obdConn"]
    assert all(c.old_by == () and c.new_by == ("f",) for c in changes.mitigation_changed)


def test_removed_threats_reported(headlamp):
    a = assess(headlamp)
    _, changes = incremental_assess(a, headlamp, parse_delta("del public(obdConn)."))
    assert [t.entry for t in changes.removed_threats] == ["obdConn", "obdConn"]


def _valid_pairs(seed, count):
    rng = random.Random(seed)
    while count:
        m = random_model(rng)
        d = random_delta(rng, m)
        try:
            m2 = apply_delta(m, d)
        except (DeltaError, ModelValidationError):
            continue
        count -= 1
        yield m, d, m2


def test_incremental_matches_full_recompute():
    for m, d, m2 in _valid_pairs(5, 150):
        old = assess(m)
        inc, changes = incremental_assess(old, m, d)
        full = assess(m2)
        assert inc == full
        assert changes == diff_assessments(old, full)


def test_apply_delta_composes():
    rng = random.Random(17)
    checked = 0
    while checked < 100:
        m = random_model(rng)
        d1 = random_delta(rng, m)
        try:
            m1 = apply_delta(m, d1)
            d2 = random_delta(rng, m1)
            m12 = apply_delta(m1, d2)
        except (DeltaError, ModelValidationError):
            continue
        checked += 1
        assert apply_delta(m, d1 + d2) == m12


def test_changeset_lists_disjoint():
    for m, d, m2 in _valid_pairs(23, 100):
        _, c = incremental_assess(assess(m), m, d)
        groups = [
            set(c.added_threats),
            set(c.removed_threats),
            {r.threat for r in c.risk_changed},
            {r.threat for r in c.mitigation_changed},
        ]
        assert sum(map(len, groups)) == len(set().union(*groups))


def test_add_existing_fact_is_noop(headlamp):
    assert apply_delta(headlamp, Delta((("add", Fact("public", ("bt",))),))) == headlamp


def test_changeset_entries_really_differ():
    for m, d, m2 in _valid_pairs(29, 100):
        old, full = assess(m), assess(m2)
        _, c = incremental_assess(old, m, d)
        assert set(c.added_threats).isdisjoint(old.threats)
        assert set(c.added_threats) <= set(full.threats)
        assert set(c.removed_threats).isdisjoint(full.threats)
        assert set(c.removed_threats) <= set(old.threats)


def test_diff_of_same_assessment_is_empty(headlamp):
    a = assess(headlamp)
    assert diff_assessments(a, a).is_empty


def test_conflicting_step_rating_rejected(headlamp):
    d = parse_delta("add stepRating(can2, int, bt, 1, layman, 0, standard, public, unlimited).")
    with pytest.raises(ModelValidationError) as exc:
        apply_delta(headlamp, d)
    assert exc.value.located[0][1].code == "duplicate-step"
