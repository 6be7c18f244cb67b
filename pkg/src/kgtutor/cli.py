"""Command line entry points: build-space, diagnose, simulate, evaluate, report.

Exit codes: 0 success, 1 input error, 2 run finished but some responses
were flagged after exhausting their retries.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import io as kio
from .agents import AuditLog, AuthFailure, Condition, MockProvider, ModelEndpoint
from .diagnosis import classify
from .formula import ParseError
from .metrics import (
    DEFAULT_TIERS,
    TierSpec,
    eta_by,
    results_table,
    summarize,
    tier_table,
    to_csv,
    to_json,
)
from .pipeline import RunConfig, evaluate, load_config, read_claims, simulate
from .rules import RuleOptions, parse_rule_id
from .solutionspace import InvalidProblem, SaturationConfig, saturate

EXIT_OK, EXIT_INPUT, EXIT_FLAGGED = 0, 1, 2

log = logging.getLogger("kgtutor")


class InputError(Exception):
    pass


def _json_files(path: Path, suffix: str = ".json") -> list[Path]:
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise InputError(f"{path} does not exist")
    return sorted(p for p in path.iterdir() if p.name.endswith(suffix))


def _rules(text: str | None) -> RuleOptions:
    if not text:
        return RuleOptions()
    try:
        enabled = frozenset(parse_rule_id(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return RuleOptions(enabled=enabled)


# -- build-space --------------------------------------------------------------


def cmd_build_space(args) -> int:
    cfg = SaturationConfig(
        max_statements=args.max_statements,
        max_complexity=args.max_complexity,
        max_depth=args.max_depth,
        rules=_rules(args.rules),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    problems = []
    for f in _json_files(Path(args.problems)):
        doc = json.loads(f.read_text(encoding="utf-8"))
        if "premises" not in doc:
            continue  # states or space files sharing the directory
        problems.append(kio.problem_from_dict(doc))
    if not problems:
        raise InputError(f"no problem files under {args.problems}")
    for p in problems:
        space = saturate(p, cfg)
        kio.save_space(out / f"{p.id}.space.json", space)
        print(f"{p.id}: statements={len(space.statements)} derivations={len(space.derivations)} "
              f"saturation_complete={str(space.saturation_complete).lower()}")
    return EXIT_OK


# -- diagnose -----------------------------------------------------------------


def cmd_diagnose(args) -> int:
    space = kio.load_space(args.space)
    states = kio.load_states(args.state)
    if args.state_id:
        chosen = [s for s in states if s.id == args.state_id]
        if not chosen:
            raise InputError(f"no state with id {args.state_id!r}")
        state = chosen[0]
    else:
        state = states[0]
    claim = kio.load_claim(args.claim)
    diag = classify(space, state, claim)
    print(json.dumps(diag.to_dict(), ensure_ascii=False, sort_keys=True))
    return EXIT_OK


# -- simulate / evaluate ----------------------------------------------------------


def _providers(endpoints_path: Path, cfg: RunConfig) -> dict:
    """Mock providers for endpoints whose base_url starts with ``mock:``."""
    raw = json.loads(endpoints_path.read_text(encoding="utf-8"))
    entries = raw if isinstance(raw, list) else raw.get("endpoints", [])
    out = {}
    for entry, ep in zip(entries, cfg.endpoints):
        if not ep.base_url.startswith("mock:"):
            continue
        spec = entry.get("mock", {})
        script = spec.get("script", {})
        if isinstance(script, str):
            script = json.loads((endpoints_path.parent / script).read_text(encoding="utf-8"))
        out[ep.name] = MockProvider(script=script, default=spec.get("default"),
                                    strict=spec.get("strict", True), queue=spec.get("queue"))
    return out


def _check_keys(endpoints: Sequence[ModelEndpoint]) -> None:
    for ep in endpoints:
        if ep.base_url.startswith("mock:"):
            continue
        try:
            ep.api_key()
        except AuthFailure as exc:
            raise InputError(str(exc)) from exc


def _load_run(args) -> tuple[RunConfig, dict]:
    try:
        cfg = load_config(args.endpoints)
    except (OSError, ValueError, TypeError) as exc:
        raise InputError(f"cannot read endpoints file {args.endpoints}: {exc}") from exc
    _check_keys(cfg.endpoints)
    return cfg, _providers(Path(args.endpoints), cfg)


def _load_spaces(directory: str) -> dict:
    spaces = {}
    for f in _json_files(Path(directory), ".space.json"):
        s = kio.load_space(f)
        spaces[s.problem.id] = s
    if not spaces:
        raise InputError(f"no *.space.json files under {directory}")
    return spaces


def cmd_simulate(args) -> int:
    if args.roles.strip().lower() != "student":
        raise InputError("simulate only runs the student role")
    cfg, providers = _load_run(args)
    spaces = _load_spaces(args.spaces)
    states = []
    for f in _json_files(Path(args.states), ".json"):
        doc = json.loads(f.read_text(encoding="utf-8"))
        if "states" not in doc:
            continue
        states.extend(kio.load_states(f))
    missing = sorted({s.problem.id for s in states} - set(spaces))
    if missing:
        raise InputError(f"no solution space for problem(s): {', '.join(missing)}")
    audit = AuditLog(args.audit) if args.audit else None
    recs = simulate(states, cfg.endpoints, args.out, providers or None, audit, cfg.digest())
    flagged = sum(r.flagged for r in recs)
    print(f"simulated {len(recs)} claim(s); flagged={flagged}")
    return EXIT_FLAGGED if flagged else EXIT_OK


def cmd_evaluate(args) -> int:
    cfg, providers = _load_run(args)
    spaces = _load_spaces(args.spaces)
    try:
        conditions = [Condition.parse(c) for c in args.conditions.split(",") if c.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    claims = read_claims(args.pairs_in)
    audit = AuditLog(args.audit) if args.audit else None
    summary = evaluate(claims, spaces, cfg.endpoints, args.out, conditions, providers or None,
                       audit, cfg.digest())
    for iid, model, cond, why in summary.skipped:
        print(f"skipped {iid}/{model}/{cond}: {why}", file=sys.stderr)
    print(f"wrote {len(summary.written)} pair record(s); skipped={len(summary.skipped)}; "
          f"flagged={summary.flagged}")
    return EXIT_FLAGGED if summary.flagged else EXIT_OK


# -- report ---------------------------------------------------------------------


def cmd_report(args) -> int:
    pairs = kio.read_pairs(args.pairs, strict=not args.lenient)
    rows = [p.metric_row() for p in pairs]
    group_by = [g.strip() for g in args.group_by.split(",") if g.strip()]
    tiers = DEFAULT_TIERS if args.tiers == "default" else TierSpec.from_dict(
        json.loads(Path(args.tiers).read_text(encoding="utf-8")))
    tables = {
        "summary": summarize(rows, group_by),
        "results": results_table(rows),
        "complexity_tiers": tier_table(rows, "complexity", tiers),
        "distance_tiers": tier_table(rows, "distance", tiers),
    }
    etas = {}
    for factor in ("model", "condition"):
        try:
            etas[factor] = round(eta_by(rows, factor), 6)
        except ValueError:
            etas[factor] = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, table in tables.items():
            (out / f"{name}.csv").write_text(to_csv(table), encoding="utf-8")
        (out / "report.json").write_text(to_json({**tables, "eta_squared": etas}), encoding="utf-8")
    if args.format == "json":
        sys.stdout.write(to_json({**tables, "eta_squared": etas}))
    else:
        sys.stdout.write(to_csv(tables["summary"]))
        for factor, v in etas.items():
            print(f"eta_squared[{factor}]={v}")
    return EXIT_OK


# -- entry ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kgtutor", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-space", help="saturate problems into solution-space JSON")
    b.add_argument("--problems", required=True, help="problem JSON file or directory")
    b.add_argument("--out", required=True)
    b.add_argument("--max-statements", type=int, default=5000)
    b.add_argument("--max-complexity", type=int, default=11)
    b.add_argument("--max-depth", type=int, default=12)
    b.add_argument("--rules", help="comma-separated rule short names (default: all 16)")
    b.set_defaults(func=cmd_build_space)

    d = sub.add_parser("diagnose", help="classify one claim against a space")
    d.add_argument("--space", required=True)
    d.add_argument("--state", required=True, help="states JSON file")
    d.add_argument("--state-id")
    d.add_argument("--claim", required=True)
    d.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("simulate", help="student step per (state, model)")
    s.add_argument("--spaces", required=True)
    s.add_argument("--states", required=True, help="states JSON file or directory")
    s.add_argument("--endpoints", required=True)
    s.add_argument("--roles", default="student")
    s.add_argument("--out", required=True)
    s.add_argument("--audit")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="feedback per (claim, condition)")
    e.add_argument("--pairs-in", required=True, help="claims JSONL from simulate")
    e.add_argument("--spaces", required=True)
    e.add_argument("--endpoints", required=True)
    e.add_argument("--conditions", default="peer,teacher,judge")
    e.add_argument("--out", required=True)
    e.add_argument("--audit")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="metric tables from a pair corpus")
    r.add_argument("--pairs", required=True)
    r.add_argument("--group-by", default="model,condition")
    r.add_argument("--tiers", default="default")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--out", help="directory for CSV/JSON table files")
    r.add_argument("--lenient", action="store_true", help="keep unknown record fields")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, InvalidProblem, kio.SchemaError, kio.FormulaSyntaxError,
            kio.JustificationError, ParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
