"""Command line entry point: ``roundtaylor <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .exact import GridSpec, format_rat, rat
from .fields import A0, FIELDS, dump_dictionary
from .pipeline import (
    EXIT_CODES,
    PipelineConfig,
    Proof,
    export_trajectory,
    parse_config,
    report_json,
    repro_intro,
)
from .topology import FAIL, INCONCLUSIVE, PASS, ProofConstants


def _emit(rep: dict, path: str | None) -> None:
    text = report_json(rep)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> PipelineConfig:
    cfg = parse_config(Path(args.config).read_text()) if getattr(args, "config", None) else PipelineConfig()
    changes = {}
    if getattr(args, "serial", False):
        changes["serial"] = True
    if getattr(args, "workers", None):
        changes["workers"] = args.workers
    if getattr(args, "budget", None):
        changes["budget"] = args.budget
    return cfg.__class__(**{**cfg.__dict__, **changes}) if changes else cfg


def cmd_repro(args) -> int:
    rep = repro_intro(args.grid_exp)
    _emit(rep, args.report)
    return EXIT_CODES[rep["verdict"]]


def cmd_verify(args) -> int:
    target = args.what
    proof = Proof(_config(args))
    if target == "bounds" and args.phi:
        from .bounds import certify_table

        table = certify_table(args.phi, budget=proof.cfg.budget)
        rep = {"target": "bounds", "dictionary": {str(i): c.summary() for i, c in sorted(table.items())}}
        rep["verdict"] = PASS if all(c.status == "certified" for c in table.values()) else (
            FAIL if any(c.status == "refuted" for c in table.values()) else INCONCLUSIVE)
        _emit(rep, args.report)
        return EXIT_CODES[rep["verdict"]]
    rep = proof.report(target)
    if args.timing:
        rep["timing"] = proof.timing
    _emit(rep, args.report)
    for name, c in rep["certificates"].items():
        print(f"{name}: {c['verdict']}", file=sys.stderr)
    for name, c in rep.get("reproduction", {}).items():
        print(f"{name} (reproduction, not part of the verdict): {c['verdict']}", file=sys.stderr)
    print(f"overall: {rep['verdict']}", file=sys.stderr)
    return EXIT_CODES[rep["verdict"]]


def cmd_run(args) -> int:
    from .bounds import PUBLISHED_CONSTANTS
    from .integrator import RunConfig, round_taylor_run, write_csv

    spec = FIELDS[args.field]
    pc = ProofConstants.published()
    a = rat(args.a) if args.a else A0
    b = rat(args.b) if args.b else pc.b0
    t = rat(args.t) if args.t else pc.t0
    cfg = RunConfig(spec, a, spec.initial_state(b), t / args.steps, GridSpec(args.grid_exp), args.steps,
                    order=args.order, constants=PUBLISHED_CONSTANTS[args.field] if args.order == 2 else None)
    rec = round_taylor_run(cfg)
    if args.csv:
        write_csv(rec, args.csv, every=args.every)
    summary = rec.summary()
    summary["b"] = format_rat(b)
    summary["t"] = format_rat(t)
    print(json.dumps(summary, indent=2))
    return 0 if rec.certified else 1


def cmd_export(args) -> int:
    pc = ProofConstants.published()
    info = export_trajectory(args.a or pc.a0, args.b or pc.b0, args.t or pc.t0, args.steps, args.out,
                             grid_exponent=args.grid_exp, every=args.every)
    print(f"wrote {info['rows']} rows to {info['path']} (plotting only, not certified)", file=sys.stderr)
    return 0


def cmd_dump(args) -> int:
    sys.stdout.write(dump_dictionary())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roundtaylor", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("repro", help="reproduce the introductory table")
    r.add_argument("what", choices=["intro"])
    r.add_argument("--grid-exp", type=int, default=6)
    r.add_argument("--report")
    r.set_defaults(func=cmd_repro)

    v = sub.add_parser("verify", help="run proof stages and emit a JSON report")
    v.add_argument("what", choices=["bounds", "lemma1", "lemma2", "lemma3", "lemma4", "theta", "full"])
    v.add_argument("--config", help="key=value file with p/q rationals")
    v.add_argument("--report", help="write the JSON report here instead of stdout")
    v.add_argument("--phi", type=int, nargs="*", help="dictionary entries to certify (bounds only)")
    v.add_argument("--budget", type=int)
    v.add_argument("--serial", action="store_true", help="run the integrations one after another")
    v.add_argument("--workers", type=int)
    v.add_argument("--timing", action="store_true", help="include wall-clock times in the report")
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("run", help="one Round Taylor run")
    n.add_argument("--field", choices=sorted(FIELDS), default="W")
    n.add_argument("--a")
    n.add_argument("--b")
    n.add_argument("--t")
    n.add_argument("--steps", type=int, default=30000)
    n.add_argument("--grid-exp", type=int, default=14)
    n.add_argument("--order", type=int, choices=[1, 2], default=2)
    n.add_argument("--csv")
    n.add_argument("--every", type=int, default=1)
    n.set_defaults(func=cmd_run)

    e = sub.add_parser("export", help="write body positions to CSV")
    e.add_argument("what", choices=["trajectory"])
    e.add_argument("--a")
    e.add_argument("--b")
    e.add_argument("--t")
    e.add_argument("--steps", type=int, default=30000)
    e.add_argument("--grid-exp", type=int, default=14)
    e.add_argument("--every", type=int, default=1)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export)

    d = sub.add_parser("dump", help="print the dictionary with its published bounds")
    d.add_argument("what", choices=["phi"])
    d.set_defaults(func=cmd_dump)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
