"""Fact-based text format for models and deltas.

Grammar::

    model   = { fact }
    delta   = { ("add" | "del") fact }
    fact    = IDENT "(" [ term { "," term } ] ")" "."
    term    = IDENT | STRING | INT | "[" [ term { "," term } ] "]"
    IDENT   = [a-zA-Z][a-zA-Z0-9_]*
    STRING  = '"' { char | '\\"' | '\\\\' } '"'
    INT     = [0-9]+

``%`` starts a comment running to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .model import (
    Channel,
    DamageScenario,
    Firewall,
    ImpactVector,
    Model,
    ModelValidationError,
    Property,
    SecMonChannel,
    SecMonComponent,
    StepRating,
    Violation,
    validate_model,
)


class DslError(Exception):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        self.detail = message
        super().__init__(f"{line}:{column}: {message}")


class DslSyntaxError(DslError):
    pass


class UnknownFunctorError(DslError):
    pass


class ArityError(DslError):
    """Wrong number of arguments, wrong argument kind, or too few channel endpoints."""


@dataclass(frozen=True)
class Quoted:
    text: str


Term = Union[str, int, Quoted, tuple]


@dataclass(frozen=True)
class Fact:
    functor: str
    args: tuple
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"{self.functor}({','.join(render_term(a) for a in self.args)})."


@dataclass(frozen=True)
class Delta:
    ops: tuple[tuple[str, Fact], ...] = ()

    def __add__(self, other: Delta) -> Delta:
        return Delta(self.ops + other.ops)


def render_term(t: Term) -> str:
    if isinstance(t, Quoted):
        return '"' + t.text.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(t, tuple):
        return "[" + ",".join(render_term(x) for x in t) + "]"
    return str(t)


# --- lexer -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<ident>[a-zA-Z][a-zA-Z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<punct>[()\[\],.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> Iterator[_Tok]:
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            if text[pos] == '"':
                raise DslSyntaxError("unterminated string", line, col)
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            yield _Tok(value if kind == "punct" else kind, value, line, col)
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    yield _Tok("eof", "", line, pos - line_start + 1)


def _unescape(raw: str) -> str:
    return re.sub(r"\\(.)", r"\1", raw[1:-1], flags=re.DOTALL)


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokenize(text))
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def expect(self, kind: str, what: str | None = None) -> _Tok:
        t = self.tok
        if t.kind != kind:
            found = "end of input" if t.kind == "eof" else repr(t.value)
            raise DslSyntaxError(f"expected {what or repr(kind)}, found {found}", t.line, t.col)
        self.i += 1
        return t

    def term(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return t.value, t
        if t.kind == "int":
            self.i += 1
            return int(t.value), t
        if t.kind == "string":
            self.i += 1
            return Quoted(_unescape(t.value)), t
        if t.kind == "[":
            self.i += 1
            items = []
            if self.tok.kind != "]":
                items.append(self.term()[0])
                while self.tok.kind == ",":
                    self.i += 1
                    items.append(self.term()[0])
            self.expect("]", "',' or ']'")
            return tuple(items), t
        found = "end of input" if t.kind == "eof" else repr(t.value)
        raise DslSyntaxError(f"expected a term, found {found}", t.line, t.col)

    def fact(self) -> tuple[Fact, list[_Tok]]:
        head = self.expect("ident", "a fact name")
        self.expect("(", "'('")
        args, where = [], []
        if self.tok.kind != ")":
            while True:
                value, tok = self.term()
                args.append(value)
                where.append(tok)
                if self.tok.kind != ",":
                    break
                self.i += 1
        self.expect(")", "',' or ')'")
        self.expect(".", "'.'")
        fact = Fact(head.value, tuple(args), head.line)
        _check_signature(fact, head, where)
        return fact, where


# --- signatures ------------------------------------------------------------

_ENUMS = {
    "prop": {p.value for p in Property},
    "impact": {"sev", "maj", "mod", "neg"},
    "expertise": {"layman", "proficient", "expert", "multipleExperts"},
    "equipment": {"standard", "specialized", "bespoke", "multipleBespoke"},
    "knowledge": {"public", "restricted", "confidential", "strictlyConfidential"},
    "opportunity": {"unlimited", "easy", "moderate", "difficult"},
}

SIGNATURES: dict[str, tuple[str, ...]] = {
    "component": ("id",),
    "channel": ("id", "idlist"),
    "public": ("id",),
    "asset": ("id",),
    "dmgScenario": ("str", "id", "prop", "impacts"),
    "stepRating": ("id", "prop", "id", "int", "expertise", "int", "equipment", "knowledge", "opportunity"),
    "firewall": ("id", "id", "id"),
    "secMonCP": ("id", "id", "str"),
    "secMonCH": ("id", "id", "str"),
}


def _check_signature(fact: Fact, head: _Tok, where: list[_Tok]) -> None:
    sig = SIGNATURES.get(fact.functor)
    if sig is None:
        raise UnknownFunctorError(f"unknown fact {fact.functor!r}", head.line, head.col)
    if len(fact.args) != len(sig):
        raise ArityError(
            f"{fact.functor} takes {len(sig)} argument(s), got {len(fact.args)}", head.line, head.col
        )
    for kind, arg, tok in zip(sig, fact.args, where):
        err = _check_arg(kind, arg)
        if err:
            raise ArityError(f"{fact.functor}: {err}", tok.line, tok.col)
    if fact.functor == "channel" and len(fact.args[1]) < 2:
        raise ArityError(
            f"channel {fact.args[0]} needs at least 2 endpoints, got {len(fact.args[1])}",
            where[1].line,
            where[1].col,
        )


def _check_arg(kind: str, arg) -> str | None:
    if kind == "id":
        return None if isinstance(arg, str) else f"expected an identifier, got {render_term(arg)}"
    if kind == "str":
        return None if isinstance(arg, Quoted) else f"expected a quoted string, got {render_term(arg)}"
    if kind == "int":
        return None if isinstance(arg, int) else f"expected an integer, got {render_term(arg)}"
    if kind == "idlist":
        if isinstance(arg, tuple) and all(isinstance(x, str) for x in arg):
            return None
        return f"expected a list of identifiers, got {render_term(arg)}"
    if kind == "impacts":
        if isinstance(arg, tuple) and len(arg) == 4 and all(isinstance(x, str) and x in _ENUMS["impact"] for x in arg):
            return None
        return f"expected [S,F,O,P] impact levels (sev|maj|mod|neg), got {render_term(arg)}"
    allowed = _ENUMS[kind]
    if isinstance(arg, str) and arg in allowed:
        return None
    return f"expected {kind} ({'|'.join(sorted(allowed))}), got {render_term(arg)}"


# --- model <-> facts -------------------------------------------------------

def facts_to_model(facts: Iterable[Fact]) -> Model:
    components: set[str] = set()
    channels: list[Channel] = []
    public: set[str] = set()
    assets: set[str] = set()
    scenarios: list[DamageScenario] = []
    patterns = []
    ratings = {}
    for f in facts:
        a = f.args
        if f.functor == "component":
            components.add(a[0])
        elif f.functor == "channel":
            channels.append(Channel(a[0], tuple(a[1])))
        elif f.functor == "public":
            public.add(a[0])
        elif f.functor == "asset":
            assets.add(a[0])
        elif f.functor == "dmgScenario":
            scenarios.append(DamageScenario(a[0].text, a[1], Property(a[2]), ImpactVector.of(*a[3])))
        elif f.functor == "stepRating":
            key = (a[0], Property(a[1]), a[2], a[3])
            ratings[key] = StepRating.of(*a[4:])
        elif f.functor == "firewall":
            patterns.append(Firewall(a[0], a[1], a[2]))
        elif f.functor == "secMonCP":
            patterns.append(SecMonComponent(a[0], a[1], a[2].text))
        elif f.functor == "secMonCH":
            patterns.append(SecMonChannel(a[0], a[1], a[2].text))
        else:  # pragma: no cover - signatures are checked at parse time
            raise ValueError(f"unknown functor {f.functor}")
    return Model(
        component_ids=frozenset(components),
        channels=tuple(sorted(channels, key=lambda c: c.id)),
        public=frozenset(public),
        assets=frozenset(assets),
        damage_scenarios=tuple(scenarios),
        patterns=tuple(sorted(patterns, key=lambda p: p.id)),
        step_ratings=ratings,
    )


def model_to_facts(m: Model) -> list[Fact]:
    """Facts describing ``m``; damage scenarios keep their declaration order."""
    out = [Fact("component", (c,)) for c in sorted(m.component_ids)]
    out += [Fact("channel", (ch.id, tuple(ch.endpoints))) for ch in m.channels]
    out += [Fact("public", (p,)) for p in sorted(m.public)]
    out += [Fact("asset", (a,)) for a in sorted(m.assets)]
    for ds in m.damage_scenarios:
        impacts = tuple(level.value for level in ds.impact.as_tuple())
        out.append(Fact("dmgScenario", (Quoted(ds.description), ds.asset, ds.property.value, impacts)))
    for (asset, prop, entry, index), r in m.step_ratings.items():
        out.append(
            Fact(
                "stepRating",
                (
                    asset,
                    prop.value,
                    entry,
                    index,
                    r.expertise.value,
                    r.elapsed_time_days,
                    r.equipment.value,
                    r.knowledge.value,
                    r.opportunity.value,
                ),
            )
        )
    for p in m.patterns:
        if isinstance(p, Firewall):
            out.append(Fact("firewall", (p.id, p.channel, p.component)))
        elif isinstance(p, SecMonComponent):
            out.append(Fact("secMonCP", (p.id, p.component, Quoted(p.policy))))
        else:
            out.append(Fact("secMonCH", (p.id, p.channel, Quoted(p.policy))))
    return out


def _term_key(t):
    if isinstance(t, int):
        return (0, t, "")
    if isinstance(t, Quoted):
        return (1, 0, t.text)
    if isinstance(t, tuple):
        return (2, 0, "", tuple(_term_key(x) for x in t))
    return (1, 0, t)


def fact_sort_key(f: Fact):
    return (f.functor, tuple(_term_key(a) for a in f.args))


def fact_mentions(f: Fact) -> set[str]:
    out: set[str] = set()
    for a in f.args:
        if isinstance(a, str):
            out.add(a)
        elif isinstance(a, tuple):
            out.update(x for x in a if isinstance(x, str))
    return out


def locate_violations(violations: list[Violation], facts: list[Fact]) -> list[tuple[int | None, Violation]]:
    """Attach to each violation the line of the first fact mentioning its identifier."""
    located = []
    for v in violations:
        line = next((f.line for f in facts if v.ident in fact_mentions(f)), None)
        located.append((line, v))
    return located


# --- public API ------------------------------------------------------------

def parse_facts(text: str) -> list[Fact]:
    p = _Parser(text)
    facts = []
    while p.tok.kind != "eof":
        facts.append(p.fact()[0])
    return facts


def parse_model(text: str, validate: bool = True) -> Model:
    """Parse a model file.

    Raises :class:`DslError` subclasses on malformed text and
    :class:`ModelValidationError` when the facts describe an invalid model.
    """
    facts = parse_facts(text)
    violations = conflicting_step_ratings(facts)
    m = facts_to_model(facts)
    if validate:
        violations += validate_model(m)
        if violations:
            raise ModelValidationError(violations, locate_violations(violations, facts))
    return m


def conflicting_step_ratings(facts: list[Fact]) -> list[Violation]:
    seen: dict[tuple, Fact] = {}
    out = []
    for f in facts:
        if f.functor != "stepRating":
            continue
        key = f.args[:4]
        if key in seen and seen[key] != f:
            out.append(
                Violation(
                    "duplicate-step",
                    f.args[0],
                    f"conflicting stepRating for {','.join(render_term(x) for x in key)}",
                )
            )
        seen[key] = f
    return out


def parse_delta(text: str) -> Delta:
    p = _Parser(text)
    ops = []
    while p.tok.kind != "eof":
        t = p.tok
        if t.kind != "ident" or t.value not in ("add", "del"):
            found = "end of input" if t.kind == "eof" else repr(t.value)
            raise DslSyntaxError(f"expected 'add' or 'del', found {found}", t.line, t.col)
        p.i += 1
        fact, _ = p.fact()
        ops.append((t.value, fact))
    return Delta(tuple(ops))


def serialize_facts(facts: Iterable[Fact]) -> str:
    lines = sorted({f for f in facts}, key=fact_sort_key)
    return "".join(f"{f}\n" for f in lines)


def serialize_model(m: Model) -> str:
    """Canonical text: one fact per line, sorted by functor then arguments."""
    return serialize_facts(model_to_facts(m))


def serialize_delta(d: Delta) -> str:
    return "".join(f"{action} {fact}\n" for action, fact in d.ops)
