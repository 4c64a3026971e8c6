"""Security arguments as GSN goal structures, with DOT export."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .incremental import Assessment
from .model import Model
from .recommend import render_pattern

ROOT_TEXT = "Item is acceptably secure"


@dataclass(frozen=True)
class GsnNode:
    id: str
    kind: str  # goal | strategy | solution | context
    text: str
    undeveloped: bool = False


@dataclass(frozen=True)
class GsnEdge:
    src: str
    dst: str
    kind: str  # supportedBy | inContextOf


@dataclass(frozen=True)
class GsnGraph:
    nodes: tuple[GsnNode, ...]
    edges: tuple[GsnEdge, ...]

    def node(self, nid: str) -> GsnNode:
        return next(n for n in self.nodes if n.id == nid)

    def children(self, nid: str, kind: str | None = None) -> list[str]:
        return [e.dst for e in self.edges if e.src == nid and (kind is None or e.kind == kind)]


def build_gsn(a: Assessment, m: Model) -> GsnGraph:
    """Argue item security threat by threat.

    Root goal, one strategy per asset, one goal per threat with a context
    node (damage scenario, feasibility, risk), and one solution per
    mitigating pattern. Threats nothing mitigates are left undeveloped.
    """
    scenarios = {(ds.asset, ds.property): ds.description for ds in m.damage_scenarios}
    patterns = {p.id: p for p in m.patterns}
    nodes = [GsnNode("G0", "goal", ROOT_TEXT)]
    edges: list[GsnEdge] = []

    for asset in sorted({t.asset for t in a.threats}):
        sid = f"S_{asset}"
        nodes.append(GsnNode(sid, "strategy", f"Argument over identified threat scenarios on {asset}"))
        edges.append(GsnEdge("G0", sid, "supportedBy"))

    for n, (t, r, mit) in enumerate(zip(a.threats, a.ratings, a.mitigations), start=1):
        gid, cid = f"G{n}", f"C{n}"
        nodes.append(GsnNode(gid, "goal", f"Threat {t.render()} is mitigated", undeveloped=not mit.mitigated))
        edges.append(GsnEdge(f"S_{t.asset}", gid, "supportedBy"))
        desc = scenarios.get((t.asset, t.property), "")
        nodes.append(
            GsnNode(
                cid,
                "context",
                f'Damage scenario "{desc}"; feasibility {r.feasibility.value}; risk {r.risk}',
            )
        )
        edges.append(GsnEdge(gid, cid, "inContextOf"))
        for pid in mit.by:
            snid = f"Sn{n}_{pid}"
            p = patterns.get(pid)
            where = render_pattern(p) if p is not None else pid
            nodes.append(GsnNode(snid, "solution", f"Pattern {pid}: {where}"))
            edges.append(GsnEdge(gid, snid, "supportedBy"))

    return GsnGraph(tuple(nodes), tuple(edges))


def gsn_problems(g: GsnGraph) -> list[str]:
    """Structural invariant violations; empty for a well-formed graph."""
    problems = []
    ids = Counter(n.id for n in g.nodes)
    problems += [f"duplicate node {nid}" for nid, c in ids.items() if c > 1]
    kinds = {n.id: n.kind for n in g.nodes}
    for e in g.edges:
        for end in (e.src, e.dst):
            if end not in kinds:
                problems.append(f"edge {e.src}->{e.dst} references missing node {end}")
    incoming = {e.dst for e in g.edges}
    roots = [n.id for n in g.nodes if n.kind == "goal" and n.id not in incoming]
    if len(roots) != 1:
        problems.append(f"expected one root goal, found {roots}")
    for n in g.nodes:
        if n.kind == "solution" and any(e.src == n.id for e in g.edges):
            problems.append(f"solution {n.id} is not a leaf")

    adj: dict[str, list[str]] = {}
    for e in g.edges:
        adj.setdefault(e.src, []).append(e.dst)
    state: dict[str, int] = {}
    for start in kinds:
        if start in state:
            continue
        stack = [(start, iter(adj.get(start, ())))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif state.get(nxt) == 1:
                problems.append(f"cycle through {nxt}")
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(adj.get(nxt, ()))))
    return problems


_SHAPES = {
    "goal": 'shape=box',
    "strategy": 'shape=parallelogram',
    "solution": 'shape=circle',
    "context": 'shape=box, style=rounded',
}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def export_gsn_dot(g: GsnGraph) -> str:
    if not g.nodes:
        return "digraph gsn {\n}\n"
    lines = ["digraph gsn {", "  rankdir=TB;"]
    for n in sorted(g.nodes, key=lambda n: n.id):
        attrs = f"label={_quote(n.text)}, {_SHAPES[n.kind]}"
        if n.undeveloped:
            attrs += ', xlabel="undeveloped"'
        lines.append(f"  {_quote(n.id)} [{attrs}];")
    for e in sorted(g.edges, key=lambda e: (e.src, e.dst, e.kind)):
        style = "solid" if e.kind == "supportedBy" else "dashed"
        lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)} [style={style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
