import itertools
import random

import pytest

from tarakit import apply_delta, parse_model
from tarakit.model import Firewall, validate_model
from tarakit.recommend import (
    UncoverableThreatError,
    apply_solution,
    build_placements,
    candidate_placements,
    minimum_covers,
    recommend_solutions,
    render_pattern,
    unmitigated_threats,
)
from tarakit.threats import derive_threats

from randmodels import random_model


def _bt_int(m):
    (t,) = [t for t in derive_threats(m) if t.entry == "bt" and t.property.value == "int"]
    return t


def test_candidates_follow_path(headlamp):
    cands = candidate_placements(headlamp, _bt_int(headlamp))
    assert [render_pattern(p) for p in cands] == [
        "firewall(can2,gw)",
        "firewall(can1,gw)",
        "firewall(can1,nav)",
        "firewall(btIf,nav)",
        "firewall(btIf,bt)",
    ]


def test_candidates_for_component_asset(headlamp, increment):
    m = apply_delta(headlamp, increment)
    (t,) = [t for t in derive_threats(m) if t.asset == "bodyCtrl" and t.entry == "obdConn"]
    assert [render_pattern(p) for p in candidate_placements(m, t)] == ["secMonCP(bodyCtrl)", "secMonCH(can2)"]


def test_candidates_reject_mitigated_threat(headlamp_fw):
    with pytest.raises(ValueError, match="already mitigated"):
        candidate_placements(headlamp_fw, _bt_int(headlamp_fw))


def test_single_firewall_solution(headlamp):
    sols = recommend_solutions(headlamp)
    assert [s.render() for s in sols] == ["{firewall(can2,gw)}"]
    assert len(sols[0].covered) == 6


def test_two_solutions_after_increment(headlamp, increment):
    m = apply_delta(headlamp, increment)
    assert {s.render() for s in recommend_solutions(m)} == {
        "{firewall(can2,gw), secMonCH(can2)}",
        "{firewall(can2,gw), secMonCP(bodyCtrl)}",
    }


def test_max_solutions_cap(headlamp, increment):
    m = apply_delta(headlamp, increment)
    assert len(recommend_solutions(m, max_solutions=1)) == 1
    with pytest.raises(ValueError):
        recommend_solutions(m, max_solutions=0)


def test_nothing_open_gives_empty_solution(headlamp_fw):
    (s,) = recommend_solutions(headlamp_fw)
    assert s.placements == () and s.render() == "{}"


def test_public_asset_is_uncoverable():
    m = parse_model(
        "component(a). component(b). channel(ch, [a, b]). public(a). asset(a).\n"
        'dmgScenario("d", a, cnf, [maj, neg, neg, neg]).'
    )
    with pytest.raises(UncoverableThreatError) as exc:
        recommend_solutions(m)
    assert "[a,[a],cnf,maj]" in str(exc.value)


def test_apply_solution_mitigates_everything(headlamp, increment):
    m = apply_delta(headlamp, increment)
    for s in recommend_solutions(m):
        deployed = apply_solution(m, s)
        assert validate_model(deployed) == []
        assert unmitigated_threats(deployed) == []
        assert len(derive_threats(deployed)) == 9


def test_apply_solution_ids(headlamp, increment):
    m = apply_delta(headlamp, increment)
    s = next(s for s in recommend_solutions(m) if "secMonCP" in s.render())
    ids = sorted(p.id for p in apply_solution(m, s).patterns)
    assert ids == ["nuFirewall1", "nuSecMonCP1"]
    assert apply_solution(m, s) == apply_solution(m, s)


def test_apply_solution_skips_taken_ids(headlamp_text):
    m = parse_model(headlamp_text + "firewall(nuFirewall1, can3, obdConn).")
    (s,) = recommend_solutions(m)
    ids = sorted(p.id for p in apply_solution(m, s).patterns)
    assert ids == ["nuFirewall1", "nuFirewall2"]


def test_apply_empty_solution_is_identity(headlamp_fw):
    (s,) = recommend_solutions(headlamp_fw)
    assert apply_solution(headlamp_fw, s) is headlamp_fw


def test_minimum_covers_basic():
    u = frozenset({1, 2, 3})
    sets = [frozenset({1, 2}), frozenset({3}), frozenset({2, 3}), frozenset({1})]
    assert minimum_covers(u, sets) == [(0, 1), (0, 2), (2, 3)]
    assert minimum_covers(frozenset(), sets) == [()]
    assert minimum_covers(frozenset({9}), sets) == []


def _random_instances(seed, count):
    rng = random.Random(seed)
    while count:
        m = random_model(rng)
        try:
            open_ = unmitigated_threats(m)
            placements = build_placements(m, open_)
        except UncoverableThreatError:
            continue
        if not open_:
            continue
        count -= 1
        yield m, open_, placements


def test_solutions_sound_and_minimal():
    for m, open_, _ in _random_instances(41, 60):
        sols = recommend_solutions(m, max_solutions=4)
        for s in sols:
            assert s.covered == frozenset(open_)
            union = frozenset().union(*(p.covers for p in s.placements))
            assert union == frozenset(open_)
            for i in range(len(s.placements)):
                rest = s.placements[:i] + s.placements[i + 1 :]
                assert frozenset().union(*(p.covers for p in rest)) != frozenset(open_)
            assert unmitigated_threats(apply_solution(m, s)) == []


def test_optimal_against_brute_force():
    checked = 0
    for m, open_, placements in _random_instances(43, 400):
        # raw candidate coverage, recomputed without the library's dedupe
        raw = {}
        for t in open_:
            for p in candidate_placements(m, t, _check=False):
                raw.setdefault(p, set()).add(t)
        if len(raw) > 10:
            continue
        checked += 1
        sets = list(raw.values())
        universe = set(open_)
        best = next(
            k for k in range(1, len(sets) + 1)
            if any(set().union(*combo) == universe for combo in itertools.combinations(sets, k))
        )
        sols = recommend_solutions(m, max_solutions=1000)
        assert {len(s.placements) for s in sols} == {best}
        lib_sets = [p.covers for p in placements]
        brute = {
            combo
            for combo in itertools.combinations(range(len(lib_sets)), best)
            if frozenset().union(*(lib_sets[i] for i in combo)) == frozenset(universe)
        }
        assert set(minimum_covers(frozenset(universe), lib_sets)) == brute
    assert checked >= 50


def test_same_kind_same_coverage_deduplicated():
    m = parse_model(
        "component(a). component(b). component(c).\n"
        "channel(x, [a, b]). channel(y, [b, c]). public(c). asset(x).\n"
        'dmgScenario("d", x, int, [maj, neg, neg, neg]).'
    )
    # four firewalls all cover the single threat; only the least survives
    (pl,) = build_placements(m, unmitigated_threats(m))
    assert isinstance(pl.pattern, Firewall)
    assert pl.render() == "firewall(x,b)"
