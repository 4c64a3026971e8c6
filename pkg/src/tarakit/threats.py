"""Threat derivation: potential threats, attack paths, actual threats, mitigation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import (
    ConnectivityGraph,
    Firewall,
    ImpactLevel,
    ImpactVector,
    Model,
    Property,
    SecMonComponent,
    SecurityPattern,
    connectivity_graph,
)
from .rating import ImpactMode, select_impact

AttackPath = tuple[str, ...]


@dataclass(frozen=True)
class PotentialThreat:
    asset: str
    property: Property
    impact: ImpactVector
    scenario: str


@dataclass(frozen=True)
class Threat:
    asset: str
    path: AttackPath
    property: Property
    impact_used: ImpactLevel

    @property
    def entry(self) -> str:
        return self.path[-1]

    def render(self) -> str:
        return f"[{self.asset},[{','.join(self.path)}],{self.property.value},{self.impact_used.value}]"

    def sort_key(self):
        return (self.asset, self.property.value, self.entry, len(self.path), self.path, self.impact_used.rank)

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class MitigationFact:
    threat: Threat
    by: tuple[str, ...] = ()

    @property
    def mitigated(self) -> bool:
        return bool(self.by)


def derive_potential_threats(m: Model) -> list[PotentialThreat]:
    return [PotentialThreat(ds.asset, ds.property, ds.impact, ds.description) for ds in m.damage_scenarios]


def path_sort_key(path: AttackPath):
    return (path[-1], len(path), path)


def enumerate_attack_paths(m: Model, asset: str, graph: ConnectivityGraph | None = None) -> list[AttackPath]:
    """All simple paths from a public component to ``asset``, asset first.

    The walk starts at the asset and records the current path whenever it
    stands on a public component; it keeps going past it, since another entry
    may reach the asset through that component.
    """
    g = graph or connectivity_graph(m)
    if asset not in g.adjacency:
        return []
    entries = set(m.public_components())
    if not entries:
        return []
    found: list[AttackPath] = []
    path = [asset]
    on_path = {asset}
    # explicit stack of neighbour iterators keeps deep graphs off the recursion limit
    stack = [iter(g.neighbours(asset))]
    if asset in entries:
        found.append((asset,))
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            on_path.discard(path.pop())
            continue
        if nxt in on_path:
            continue
        path.append(nxt)
        on_path.add(nxt)
        if nxt in entries:
            found.append(tuple(path))
        stack.append(iter(g.neighbours(nxt)))
    found.sort(key=path_sort_key)
    return found


def all_attack_paths(m: Model, graph: ConnectivityGraph | None = None) -> dict[str, list[AttackPath]]:
    g = graph or connectivity_graph(m)
    return {a: enumerate_attack_paths(m, a, g) for a in sorted(m.assets)}


def path_warnings(m: Model) -> list[str]:
    return [
        f"asset {a} is itself public; its only attack path is the trivial path [{a}]"
        for a in sorted(m.assets & m.public & m.component_ids)
    ]


def derive_threats(
    m: Model,
    impact_mode: ImpactMode | str = ImpactMode.SAFETY,
    paths: dict[str, list[AttackPath]] | None = None,
    assets: Iterable[str] | None = None,
) -> list[Threat]:
    """Cross every potential threat with its asset's attack paths.

    ``assets`` restricts derivation to those assets (used by incremental
    re-derivation).
    """
    g = connectivity_graph(m)
    paths = dict(paths or {})
    only = set(assets) if assets is not None else None
    out = []
    for pt in derive_potential_threats(m):
        if only is not None and pt.asset not in only:
            continue
        if pt.asset not in paths:
            paths[pt.asset] = enumerate_attack_paths(m, pt.asset, g)
        level = select_impact(pt.impact, impact_mode)
        out.extend(Threat(pt.asset, p, pt.property, level) for p in paths[pt.asset])
    return out


def _adjacent_in(path: Sequence[str], a: str, b: str) -> bool:
    return any({path[i], path[i + 1]} == {a, b} for i in range(len(path) - 1))


def pattern_mitigates(pattern: SecurityPattern, threat: Threat, channel_ids: frozenset[str]) -> bool:
    asset_is_channel = threat.asset in channel_ids
    if isinstance(pattern, Firewall):
        return asset_is_channel and _adjacent_in(threat.path, pattern.channel, pattern.component)
    if isinstance(pattern, SecMonComponent):
        return threat.asset == pattern.component
    if threat.asset == pattern.channel:
        return True
    return not asset_is_channel and len(threat.path) > 1 and threat.path[1] == pattern.channel


def derive_mitigations(m: Model, threats: Iterable[Threat]) -> list[MitigationFact]:
    channel_ids = m.channel_ids
    patterns = sorted(m.patterns, key=lambda p: p.id)
    return [
        MitigationFact(t, tuple(p.id for p in patterns if pattern_mitigates(p, t, channel_ids)))
        for t in threats
    ]
