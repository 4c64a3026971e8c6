"""Command-line entry point: ``tarakit assess|recommend|delta|gsn``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dsl import DslError, parse_delta, parse_model, serialize_model
from .gsn import build_gsn, export_gsn_dot
from .incremental import ChangeSet, DeltaError, apply_delta, assess, incremental_assess
from .model import ModelValidationError
from .recommend import DEFAULT_MAX_SOLUTIONS, UncoverableThreatError, recommend_solutions
from .report import build_report, export_report_json, render_risk_table

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_UNCOVERABLE = 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(EXIT_IO, f"{path}: {exc.strerror or exc}") from exc


def _load_model(path: str):
    text = _read(path)
    try:
        return parse_model(text)
    except DslError as exc:
        raise _Fail(EXIT_PARSE, f"{path}:{exc.line}:{exc.column}: {exc.detail}") from exc
    except ModelValidationError as exc:
        lines = [
            f"{path}:{where}: {v}" if where is not None else f"{path}: {v}" for where, v in exc.located
        ]
        raise _Fail(EXIT_VALIDATION, "\n".join(lines)) from exc


def _load_delta(path: str):
    text = _read(path)
    try:
        return parse_delta(text)
    except DslError as exc:
        raise _Fail(EXIT_PARSE, f"{path}:{exc.line}:{exc.column}: {exc.detail}") from exc


def cmd_assess(args) -> int:
    m = _load_model(args.model)
    report = build_report(assess(m, args.impact))
    if args.format == "json":
        sys.stdout.write(export_report_json(report))
        return EXIT_OK
    sys.stdout.write(render_risk_table(report))
    sys.stdout.write(f"\n{len(report.threats)} threat(s), {len(report.unmitigated)} unmitigated\n")
    for w in report.warnings:
        sys.stdout.write(f"warning: {w}\n")
    return EXIT_OK


def cmd_recommend(args) -> int:
    m = _load_model(args.model)
    try:
        solutions = recommend_solutions(m, args.max_solutions, args.impact)
    except UncoverableThreatError as exc:
        raise _Fail(EXIT_UNCOVERABLE, str(exc)) from exc
    size = len(solutions[0].placements)
    if args.format == "json":
        doc = {
            "schema": 1,
            "minimum_cardinality": size,
            "solutions": [
                {
                    "placements": [
                        {
                            "pattern": p.render(),
                            "kind": p.pattern.kind,
                            "note": p.note,
                            "covers": sorted(t.render() for t in p.covers),
                        }
                        for p in s.placements
                    ],
                    "covered": sorted(t.render() for t in s.covered),
                }
                for s in solutions
            ],
        }
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return EXIT_OK
    if size == 0:
        sys.stdout.write("all threats are mitigated; nothing to recommend\n")
        return EXIT_OK
    sys.stdout.write(f"{len(solutions)} solution(s) of {size} placement(s)\n")
    for i, s in enumerate(solutions, start=1):
        sys.stdout.write(f"\nsolution {i}: {s.render()}\n")
        for p in s.placements:
            sys.stdout.write(f"  {p.render()}: covers {len(p.covers)} threat(s); {p.note}\n")
    return EXIT_OK


def _write_changeset(cs: ChangeSet) -> None:
    if cs.is_empty:
        sys.stdout.write("no changes\n")
        return
    for t in cs.added_threats:
        sys.stdout.write(f"+ {t.render()}\n")
    for t in cs.removed_threats:
        sys.stdout.write(f"- {t.render()}\n")
    for rc in cs.risk_changed:
        sys.stdout.write(f"~ {rc.threat.render()} risk {rc.old} -> {rc.new}\n")
    for mc in cs.mitigation_changed:
        old = ",".join(mc.old_by) or "-"
        new = ",".join(mc.new_by) or "-"
        sys.stdout.write(f"* {mc.threat.render()} mitigated-by {old} -> {new}\n")


def cmd_delta(args) -> int:
    m = _load_model(args.model)
    d = _load_delta(args.delta)
    before = assess(m, args.impact)
    try:
        new_model = apply_delta(m, d)
        after, changes = incremental_assess(before, m, d)
    except DeltaError as exc:
        raise _Fail(EXIT_VALIDATION, f"{args.delta}: {exc}") from exc
    except ModelValidationError as exc:
        lines = [
            f"{args.delta}: op {where}: {v}" if where is not None else f"{args.delta}: {v}"
            for where, v in exc.located
        ]
        raise _Fail(EXIT_VALIDATION, "\n".join(lines)) from exc

    sys.stdout.write(f"applied {len(d.ops)} op(s); threats {len(before.threats)} -> {len(after.threats)}\n")
    for line in new_model.provenance:
        sys.stdout.write(f"cascade: {line}\n")
    sys.stdout.write(
        f"added {len(changes.added_threats)}, removed {len(changes.removed_threats)}, "
        f"risk changed {len(changes.risk_changed)}, mitigation changed {len(changes.mitigation_changed)}\n"
    )
    if args.diff:
        _write_changeset(changes)
    if args.out:
        Path(args.out).write_text(serialize_model(new_model), encoding="utf-8")
    return EXIT_OK


def cmd_gsn(args) -> int:
    m = _load_model(args.model)
    dot = export_gsn_dot(build_gsn(assess(m, args.impact), m))
    if args.output:
        Path(args.output).write_text(dot, encoding="utf-8")
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tarakit", description="Rule-based ISO 21434 risk assessment.")
    sub = parser.add_subparsers(dest="command", required=True)

    def impact(p):
        p.add_argument("--impact", choices=["safety", "max"], default="safety")

    p = sub.add_parser("assess", help="derive threats, feasibility and risk")
    p.add_argument("model")
    impact(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("recommend", help="minimum pattern placements for unmitigated threats")
    p.add_argument("model")
    p.add_argument("--max-solutions", type=int, default=DEFAULT_MAX_SOLUTIONS)
    impact(p)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("delta", help="apply an increment and re-assess incrementally")
    p.add_argument("model")
    p.add_argument("delta")
    p.add_argument("--diff", action="store_true", help="list changed threats")
    p.add_argument("--out", help="write the updated model here")
    impact(p)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("gsn", help="emit the security argument as DOT")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    impact(p)
    p.set_defaults(func=cmd_gsn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "max_solutions", 1) < 1:
        print("error: --max-solutions must be positive", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
