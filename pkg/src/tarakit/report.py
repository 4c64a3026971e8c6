"""Machine- and human-readable assessment reports."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .incremental import Assessment
from .rating import treatment_alternatives

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ThreatRow:
    threat: str
    asset: str
    property: str
    impact: str
    entry: str
    path: list[str]
    feasibility: str
    risk: int
    treatment: str
    alternatives: list[str]
    mitigated: bool
    mitigated_by: list[str]


@dataclass(frozen=True)
class Report:
    model_hash: str
    impact_mode: str
    threats: list[ThreatRow] = field(default_factory=list)
    unmitigated: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    schema: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d: dict) -> Report:
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(
            model_hash=d["model_hash"],
            impact_mode=d["impact_mode"],
            threats=[ThreatRow(**row) for row in d["threats"]],
            unmitigated=list(d["unmitigated"]),
            warnings=list(d["warnings"]),
            schema=d["schema"],
        )


def build_report(a: Assessment) -> Report:
    rows = []
    for t, r, mit in zip(a.threats, a.ratings, a.mitigations):
        rows.append(
            ThreatRow(
                threat=t.render(),
                asset=t.asset,
                property=t.property.value,
                impact=t.impact_used.value,
                entry=t.entry,
                path=list(t.path),
                feasibility=r.feasibility.value,
                risk=r.risk,
                treatment=r.treatment.value,
                alternatives=[o.value for o in treatment_alternatives(r.risk)],
                mitigated=mit.mitigated,
                mitigated_by=list(mit.by),
            )
        )
    return Report(
        model_hash=a.model_hash,
        impact_mode=a.impact_mode.value,
        threats=rows,
        unmitigated=[t.render() for t in a.unmitigated()],
        warnings=list(a.warnings),
    )


def export_report_json(r: Report) -> str:
    return json.dumps(asdict(r), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def load_report_json(text: str) -> Report:
    return Report.from_dict(json.loads(text))


TABLE_HEADER = ("threat", "property", "entry", "feasibility", "risk", "treatment", "mitigated-by")


def format_table(header, rows) -> str:
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(header)]

    def line(cells):
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    out = [line(header), "-+-".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def render_risk_table(r: Report) -> str:
    rows = []
    for row in r.threats:
        treatment = row.treatment + "".join(f" (or {alt})" for alt in row.alternatives)
        rows.append(
            (
                row.threat,
                row.property,
                row.entry,
                row.feasibility,
                str(row.risk),
                treatment,
                ",".join(row.mitigated_by) or "-",
            )
        )
    return format_table(TABLE_HEADER, rows)
