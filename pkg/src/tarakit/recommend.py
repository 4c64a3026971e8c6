"""Security-pattern recommendation as exact minimum set cover."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable

from .model import Firewall, Model, SecMonChannel, SecMonComponent, SecurityPattern
from .rating import ImpactMode
from .threats import Threat, derive_mitigations, derive_threats

DEFAULT_MAX_SOLUTIONS = 16

KIND_NOTES = {
    "firewall": "filters message flows between the channel and the component",
    "secMonCP": "software instrumentation inside the component; sees only traffic addressed to it",
    "secMonCH": "proxy on the channel; intercepts every incoming message on the channel",
}

_ID_KIND = {"firewall": "Firewall", "secMonCP": "SecMonCP", "secMonCH": "SecMonCH"}


class UncoverableThreatError(ValueError):
    def __init__(self, threats: list[Threat]):
        self.threats = threats
        super().__init__("uncoverable threat(s): " + ", ".join(t.render() for t in threats))


def render_pattern(p: SecurityPattern) -> str:
    if isinstance(p, Firewall):
        return f"firewall({p.channel},{p.component})"
    if isinstance(p, SecMonComponent):
        return f"secMonCP({p.component})"
    return f"secMonCH({p.channel})"


def default_policy(p: SecurityPattern) -> str:
    target = p.component if isinstance(p, SecMonComponent) else p.channel
    return f"accept writes to {target} only from authenticated senders"


@dataclass(frozen=True)
class Placement:
    pattern: SecurityPattern  # id left empty until the solution is applied
    covers: frozenset[Threat]

    def render(self) -> str:
        return render_pattern(self.pattern)

    @property
    def note(self) -> str:
        return KIND_NOTES[self.pattern.kind]


@dataclass(frozen=True)
class Solution:
    placements: tuple[Placement, ...]
    covered: frozenset[Threat]

    def render(self) -> str:
        return "{" + ", ".join(p.render() for p in self.placements) + "}"


def candidate_placements(m: Model, t: Threat, _check: bool = True) -> list[SecurityPattern]:
    """Pattern placements able to mitigate ``t``, in path order from the asset."""
    if _check and derive_mitigations(m, [t])[0].mitigated:
        raise ValueError(f"threat {t.render()} is already mitigated")
    channels = m.channel_ids
    if t.asset in channels:
        out: list[SecurityPattern] = []
        for a, b in zip(t.path, t.path[1:]):
            ch, cp = (a, b) if a in channels else (b, a)
            fw = Firewall("", ch, cp)
            if fw not in out:
                out.append(fw)
        return out
    if len(t.path) < 2:
        return []
    cp = SecMonComponent("", t.asset)
    ch = SecMonChannel("", t.path[1])
    return [dataclasses.replace(cp, policy=default_policy(cp)), dataclasses.replace(ch, policy=default_policy(ch))]


def unmitigated_threats(m: Model, impact_mode: ImpactMode | str = ImpactMode.SAFETY) -> list[Threat]:
    threats = derive_threats(m, impact_mode)
    return [f.threat for f in derive_mitigations(m, threats) if not f.mitigated]


def build_placements(m: Model, threats: Iterable[Threat]) -> list[Placement]:
    """Candidate placements with their coverage, deduplicated.

    Placements of the same kind covering the same threats collapse to the
    lexicographically least one; different kinds are kept apart because
    they trade off differently.
    """
    threats = list(threats)
    coverage: dict[SecurityPattern, set[Threat]] = {}
    uncoverable = []
    for t in threats:
        cands = candidate_placements(m, t, _check=False)
        if not cands:
            uncoverable.append(t)
        for p in cands:
            coverage.setdefault(p, set()).add(t)
    if uncoverable:
        raise UncoverableThreatError(uncoverable)
    best: dict[tuple[str, frozenset[Threat]], SecurityPattern] = {}
    for p, cov in coverage.items():
        key = (p.kind, frozenset(cov))
        if key not in best or render_pattern(p) < render_pattern(best[key]):
            best[key] = p
    placements = [Placement(p, cov) for (_, cov), p in best.items()]
    placements.sort(key=Placement.render)
    return placements


def minimum_covers(universe: frozenset, sets: list[frozenset], limit: int | None = None) -> list[tuple[int, ...]]:
    """All minimum-cardinality covers of ``universe`` by ``sets``, as sorted index tuples.

    Iterative deepening on the cover size; each level branches on the
    uncovered element with the fewest covering sets, which keeps the search
    exact while pruning with a size bound.
    """
    if not universe:
        return [()]
    covering = {x: [i for i, s in enumerate(sets) if x in s] for x in universe}
    if any(not c for c in covering.values()):
        return []
    biggest = max(len(s) for s in sets)
    for k in range(1, len(sets) + 1):
        found: set[tuple[int, ...]] = set()

        def search(uncovered: frozenset, chosen: tuple[int, ...]) -> None:
            if not uncovered:
                found.add(tuple(sorted(chosen)))
                return
            budget = k - len(chosen)
            if budget == 0 or budget * biggest < len(uncovered):
                return
            pivot = min(uncovered, key=lambda x: (len(covering[x]), repr(x)))
            for i in covering[pivot]:
                if i not in chosen:
                    search(uncovered - sets[i], chosen + (i,))

        search(universe, ())
        if found:
            result = sorted(found)
            return result if limit is None else result[:limit]
    return []  # pragma: no cover - the full family always covers


def recommend_solutions(
    m: Model,
    max_solutions: int = DEFAULT_MAX_SOLUTIONS,
    impact_mode: ImpactMode | str = ImpactMode.SAFETY,
) -> list[Solution]:
    if max_solutions < 1:
        raise ValueError("max_solutions must be positive")
    open_threats = unmitigated_threats(m, impact_mode)
    if not open_threats:
        return [Solution((), frozenset())]
    placements = build_placements(m, open_threats)
    universe = frozenset(open_threats)
    covers = minimum_covers(universe, [p.covers for p in placements])
    solutions = [Solution(tuple(placements[i] for i in idx), universe) for idx in covers]
    solutions.sort(key=lambda s: tuple(p.render() for p in s.placements))
    return solutions[:max_solutions]


def apply_solution(m: Model, s: Solution) -> Model:
    """Deploy the placements of ``s`` with fresh ``nu<Kind><n>`` ids."""
    if not s.placements:
        return m
    used = {p.id for p in m.patterns}
    counters: dict[str, int] = {}
    new = []
    for pl in s.placements:
        kind = _ID_KIND[pl.pattern.kind]
        n = counters.get(kind, 0)
        while True:
            n += 1
            pid = f"nu{kind}{n}"
            if pid not in used:
                break
        counters[kind] = n
        used.add(pid)
        pat = dataclasses.replace(pl.pattern, id=pid)
        if not isinstance(pat, Firewall) and not pat.policy:
            pat = dataclasses.replace(pat, policy=default_policy(pat))
        new.append(pat)
    return dataclasses.replace(
        m,
        patterns=tuple(sorted(m.patterns + tuple(new), key=lambda p: p.id)),
        provenance=(),
    )
