"""Architecture model of an item: components, channels, assets and security inputs.

Models are immutable. Anything that changes a model (delta application,
pattern deployment) builds a new one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

ID_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9_]*\Z")


class Property(str, Enum):
    CNF = "cnf"
    INT = "int"
    AVL = "avl"


class ImpactLevel(str, Enum):
    NEG = "neg"
    MOD = "mod"
    MAJ = "maj"
    SEV = "sev"

    @property
    def rank(self) -> int:
        return _IMPACT_ORDER.index(self)

    def __lt__(self, other):
        if not isinstance(other, ImpactLevel):
            return NotImplemented
        return self.rank < other.rank

    def __le__(self, other):
        if not isinstance(other, ImpactLevel):
            return NotImplemented
        return self.rank <= other.rank

    def __gt__(self, other):
        if not isinstance(other, ImpactLevel):
            return NotImplemented
        return self.rank > other.rank

    def __ge__(self, other):
        if not isinstance(other, ImpactLevel):
            return NotImplemented
        return self.rank >= other.rank


_IMPACT_ORDER = (ImpactLevel.NEG, ImpactLevel.MOD, ImpactLevel.MAJ, ImpactLevel.SEV)


class Expertise(str, Enum):
    LAYMAN = "layman"
    PROFICIENT = "proficient"
    EXPERT = "expert"
    MULTIPLE_EXPERTS = "multipleExperts"


class Equipment(str, Enum):
    STANDARD = "standard"
    SPECIALIZED = "specialized"
    BESPOKE = "bespoke"
    MULTIPLE_BESPOKE = "multipleBespoke"


class Knowledge(str, Enum):
    PUBLIC = "public"
    RESTRICTED = "restricted"
    CONFIDENTIAL = "confidential"
    STRICTLY_CONFIDENTIAL = "strictlyConfidential"


class Opportunity(str, Enum):
    UNLIMITED = "unlimited"
    EASY = "easy"
    MODERATE = "moderate"
    DIFFICULT = "difficult"


@dataclass(frozen=True)
class Component:
    id: str
    public: bool = False


@dataclass(frozen=True)
class Channel:
    id: str
    endpoints: tuple[str, ...]


@dataclass(frozen=True)
class ImpactVector:
    safety: ImpactLevel
    financial: ImpactLevel
    operational: ImpactLevel
    privacy: ImpactLevel

    def as_tuple(self) -> tuple[ImpactLevel, ImpactLevel, ImpactLevel, ImpactLevel]:
        return (self.safety, self.financial, self.operational, self.privacy)

    @classmethod
    def of(cls, *levels: str | ImpactLevel) -> ImpactVector:
        return cls(*(ImpactLevel(v) for v in levels))


@dataclass(frozen=True)
class DamageScenario:
    description: str
    asset: str
    property: Property
    impact: ImpactVector


@dataclass(frozen=True)
class StepRating:
    expertise: Expertise = Expertise.LAYMAN
    elapsed_time_days: int = 0
    equipment: Equipment = Equipment.STANDARD
    knowledge: Knowledge = Knowledge.PUBLIC
    opportunity: Opportunity = Opportunity.UNLIMITED

    @classmethod
    def of(cls, expertise, days, equipment, knowledge, opportunity) -> StepRating:
        return cls(
            Expertise(expertise),
            int(days),
            Equipment(equipment),
            Knowledge(knowledge),
            Opportunity(opportunity),
        )


# (asset, property, entry, 1-based step index)
StepKey = tuple[str, Property, str, int]


@dataclass(frozen=True)
class Firewall:
    id: str
    channel: str
    component: str

    kind = "firewall"

    def elements(self) -> tuple[str, ...]:
        return (self.channel, self.component)


@dataclass(frozen=True)
class SecMonComponent:
    id: str
    component: str
    policy: str = ""

    kind = "secMonCP"

    def elements(self) -> tuple[str, ...]:
        return (self.component,)


@dataclass(frozen=True)
class SecMonChannel:
    id: str
    channel: str
    policy: str = ""

    kind = "secMonCH"

    def elements(self) -> tuple[str, ...]:
        return (self.channel,)


SecurityPattern = Firewall | SecMonComponent | SecMonChannel


@dataclass(frozen=True)
class Violation:
    code: str
    ident: str
    message: str

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True, eq=False)
class Model:
    """An item's architecture plus its damage scenarios, patterns and step ratings.

    ``public`` holds the raw ``public(...)`` markings, so a marking on a
    channel can be represented and reported by :func:`validate_model`.
    Damage scenarios keep declaration order; equality ignores it, since the
    canonical text form sorts facts.
    """

    component_ids: frozenset[str] = frozenset()
    channels: tuple[Channel, ...] = ()
    public: frozenset[str] = frozenset()
    assets: frozenset[str] = frozenset()
    damage_scenarios: tuple[DamageScenario, ...] = ()
    patterns: tuple[SecurityPattern, ...] = ()
    step_ratings: Mapping[StepKey, StepRating] = field(default_factory=dict)
    provenance: tuple[str, ...] = ()

    @property
    def components(self) -> tuple[Component, ...]:
        return tuple(Component(c, c in self.public) for c in sorted(self.component_ids))

    @property
    def channel_ids(self) -> frozenset[str]:
        return frozenset(ch.id for ch in self.channels)

    @property
    def element_ids(self) -> frozenset[str]:
        return self.component_ids | self.channel_ids

    def channel(self, cid: str) -> Channel:
        for ch in self.channels:
            if ch.id == cid:
                return ch
        raise KeyError(cid)

    def public_components(self) -> list[str]:
        return sorted(self.public & self.component_ids)

    def _key(self):
        return (
            self.component_ids,
            frozenset(self.channels),
            self.public,
            self.assets,
            frozenset(self.damage_scenarios),
            frozenset(self.patterns),
            frozenset(self.step_ratings.items()),
        )

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


def validate_model(m: Model) -> list[Violation]:
    """Return every violated model invariant; an empty list means valid."""
    out: list[Violation] = []

    def bad(code: str, ident: str, msg: str) -> None:
        out.append(Violation(code, ident, msg))

    for ident in sorted(m.component_ids):
        if not ID_RE.match(ident):
            bad("bad-id", ident, f"malformed identifier {ident!r}")

    seen_channels: dict[str, Channel] = {}
    for ch in m.channels:
        if not ID_RE.match(ch.id):
            bad("bad-id", ch.id, f"malformed identifier {ch.id!r}")
        if ch.id in m.component_ids:
            bad("duplicate-id", ch.id, f"{ch.id} declared as both component and channel")
        if ch.id in seen_channels:
            bad("duplicate-id", ch.id, f"channel {ch.id} declared more than once")
        seen_channels[ch.id] = ch
        if len(ch.endpoints) < 2:
            bad("channel-arity", ch.id, f"channel {ch.id} needs at least 2 endpoints")
        if len(set(ch.endpoints)) != len(ch.endpoints):
            bad("duplicate-endpoint", ch.id, f"channel {ch.id} repeats an endpoint")
        for ep in ch.endpoints:
            if ep not in m.component_ids:
                bad("dangling", ep, f"channel {ch.id} endpoint {ep} is not a declared component")

    for p in sorted(m.public):
        if p in m.channel_ids:
            bad("public-non-component", p, f"public on non-component {p}")
        elif p not in m.component_ids:
            bad("dangling", p, f"public({p}) names an undeclared element")

    for a in sorted(m.assets):
        if a not in m.element_ids:
            bad("dangling", a, f"asset({a}) names an undeclared element")

    seen_pairs: set[tuple[str, Property]] = set()
    for ds in m.damage_scenarios:
        if ds.asset not in m.assets:
            bad("scenario-asset", ds.asset, f"damage scenario on {ds.asset}, which is not an asset")
        pair = (ds.asset, ds.property)
        if pair in seen_pairs:
            bad(
                "duplicate-scenario",
                ds.asset,
                f"more than one damage scenario for ({ds.asset}, {ds.property.value})",
            )
        seen_pairs.add(pair)

    seen_patterns: set[str] = set()
    for pat in m.patterns:
        if not ID_RE.match(pat.id):
            bad("bad-id", pat.id, f"malformed identifier {pat.id!r}")
        if pat.id in seen_patterns:
            bad("duplicate-id", pat.id, f"pattern id {pat.id} used more than once")
        seen_patterns.add(pat.id)
        if isinstance(pat, Firewall):
            if pat.channel not in m.channel_ids:
                bad("dangling", pat.channel, f"firewall {pat.id}: {pat.channel} is not a channel")
            if pat.component not in m.component_ids:
                bad("dangling", pat.component, f"firewall {pat.id}: {pat.component} is not a component")
            elif pat.channel in seen_channels and pat.component not in seen_channels[pat.channel].endpoints:
                bad(
                    "firewall-adjacency",
                    pat.id,
                    f"firewall {pat.id}: {pat.component} is not an endpoint of {pat.channel}",
                )
        elif isinstance(pat, SecMonComponent):
            if pat.component not in m.component_ids:
                bad("dangling", pat.component, f"secMonCP {pat.id}: {pat.component} is not a component")
        elif pat.channel not in m.channel_ids:
            bad("dangling", pat.channel, f"secMonCH {pat.id}: {pat.channel} is not a channel")

    for (asset, _prop, entry, index), r in sorted(m.step_ratings.items(), key=lambda kv: _step_sort(kv[0])):
        if asset not in m.assets:
            bad("dangling", asset, f"stepRating on {asset}, which is not an asset")
        if entry not in m.component_ids:
            bad("dangling", entry, f"stepRating entry {entry} is not a declared component")
        if index < 1:
            bad("step-index", asset, f"stepRating index {index} must be >= 1")
        if r.elapsed_time_days < 0:
            bad("step-time", asset, f"stepRating elapsed time {r.elapsed_time_days} must be >= 0")

    return out


def _step_sort(key: StepKey):
    asset, prop, entry, index = key
    return (asset, prop.value, entry, index)


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected component/channel incidence graph."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]  # (component, channel)
    adjacency: Mapping[str, tuple[str, ...]]
    channel_ids: frozenset[str]

    def neighbours(self, node: str) -> tuple[str, ...]:
        return self.adjacency.get(node, ())

    def is_channel(self, node: str) -> bool:
        return node in self.channel_ids

    def connected_component(self, start: str) -> frozenset[str]:
        if start not in self.adjacency:
            return frozenset()
        seen = {start}
        stack = [start]
        while stack:
            for nb in self.adjacency[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return frozenset(seen)


def connectivity_graph(m: Model) -> ConnectivityGraph:
    adj: dict[str, set[str]] = {c: set() for c in m.component_ids}
    edges = []
    for ch in sorted(m.channels, key=lambda c: c.id):
        adj.setdefault(ch.id, set())
        for ep in ch.endpoints:
            edges.append((ep, ch.id))
            adj[ch.id].add(ep)
            adj.setdefault(ep, set()).add(ch.id)
    return ConnectivityGraph(
        nodes=tuple(sorted(adj)),
        edges=tuple(sorted(edges, key=lambda e: (e[1], e[0]))),
        adjacency={n: tuple(sorted(adj[n])) for n in sorted(adj)},
        channel_ids=m.channel_ids,
    )


def make_model(
    components: Iterable[str] = (),
    channels: Mapping[str, Iterable[str]] | Iterable[Channel] = (),
    public: Iterable[str] = (),
    assets: Iterable[str] = (),
    damage_scenarios: Iterable[DamageScenario] = (),
    patterns: Iterable[SecurityPattern] = (),
    step_ratings: Mapping[StepKey, StepRating] | None = None,
) -> Model:
    """Convenience constructor accepting plain Python collections."""
    if isinstance(channels, Mapping):
        chans = tuple(Channel(k, tuple(v)) for k, v in channels.items())
    else:
        chans = tuple(channels)
    return Model(
        component_ids=frozenset(components),
        channels=tuple(sorted(chans, key=lambda c: c.id)),
        public=frozenset(public),
        assets=frozenset(assets),
        damage_scenarios=tuple(damage_scenarios),
        patterns=tuple(sorted(patterns, key=lambda p: p.id)),
        step_ratings=dict(step_ratings or {}),
    )


class ModelValidationError(ValueError):
    """Raised when a parsed or derived model breaks its invariants.

    ``located`` pairs each violation with a source line (or delta op index)
    when one is known.
    """

    def __init__(self, violations: list[Violation], located: list[tuple[int | None, Violation]] | None = None):
        self.violations = violations
        self.located = located or [(None, v) for v in violations]
        lines = []
        for where, v in self.located:
            lines.append(f"line {where}: {v}" if where is not None else str(v))
        super().__init__("; ".join(lines))
