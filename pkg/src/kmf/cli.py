"""Command-line front end.

Exit status: 0 success, 1 domain failure (no plan, violations, unmappable
construct, failed run), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .ontology import LibraryError, ReuseError, default_library, default_taxonomy, load_library, load_taxonomy
from .ontology import reusability_report, validate_against_taxonomy
from .ontology.taxonomy import TaxonomyError
from .pddl import MappingError, PddlCheckError, check_pair, generate
from .planner import DEFAULT_BOUND, PlanFailure, find_plan, plan_json
from .runtime import FAILED, RunError, event_log_text, load_script, simulate
from .syntax import ParseError, lint, merge_models, parse_model, print_canonical

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(paths: list[str], rules_path: str | None = None):
    models = []
    for p in paths:
        try:
            text = Path(p).read_text()
        except OSError as exc:
            raise UsageError(f"{p}: {exc.strerror}") from None
        try:
            models.append(parse_model(text))
        except ParseError as exc:
            raise UsageError(f"{p}:{exc.line}:{exc.column}: {exc.message}") from None
    try:
        m = merge_models(*models) if len(models) > 1 else models[0]
    except ParseError as exc:
        raise UsageError(str(exc.message)) from None
    if rules_path:
        rules = _load([rules_path]).rules
        if rules is None:
            raise UsageError(f"{rules_path}: no rules block")
        m = type(m)(m.states, m.transitions, m.initial, m.goal, rules)
    return m


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _need(m, *what):
    for w in what:
        if getattr(m, w) is None:
            raise UsageError(f"model declares no {w} state")


def cmd_parse(args) -> int:
    m = _load(args.files, args.rules)
    for warning in lint(m):
        print(f"warning: {warning}", file=sys.stderr)
    _emit(print_canonical(m), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    m = _load(args.files)
    try:
        tax = load_taxonomy(args.taxonomy) if args.taxonomy else default_taxonomy()
    except (OSError, ParseError, TaxonomyError) as exc:
        raise UsageError(f"taxonomy: {exc}") from None
    report = validate_against_taxonomy(m, tax)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for v in report.violations:
        print(f"violation: {v}")
    if report.ok:
        print("ok")
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_plan(args) -> int:
    m = _load(args.files, args.rules)
    _need(m, "initial", "goal")
    result = find_plan(m, args.bound)
    _emit(plan_json(result), args.out)
    return EXIT_FAIL if isinstance(result, PlanFailure) else EXIT_OK


def cmd_gen_pddl(args) -> int:
    m = _load(args.files, args.rules)
    _need(m, "initial", "goal")
    name = args.name or Path(args.files[0]).stem
    try:
        domain, problem = generate(m, name=name)
        check_pair(domain.text, problem.text)
    except MappingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except PddlCheckError as exc:
        print(f"error: generated PDDL failed the checker: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "domain.pddl").write_bytes(domain.data)
        (out / "problem.pddl").write_bytes(problem.data)
        print(json.dumps({"domain_uri": domain.uri, "problem_uri": problem.uri}, indent=2, sort_keys=True))
    else:
        sys.stdout.write(domain.text + "\n" + problem.text)
    return EXIT_OK


def cmd_exec(args) -> int:
    m = _load(args.files, args.rules)
    _need(m, "initial", "goal")
    try:
        script = load_script(args.script) if args.script else []
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"perturbation script: {exc}") from None
    try:
        run = simulate(m, script, run_id=args.run_id, bound=args.bound)
    except (RunError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(event_log_text(run), args.out)
    print(f"status: {run.status}", file=sys.stderr)
    return EXIT_FAIL if run.status == FAILED else EXIT_OK


def cmd_metrics(args) -> int:
    m = _load(args.files, args.rules)
    try:
        lib = load_library(args.library) if args.library else default_library()
    except LibraryError as exc:
        raise UsageError(f"library: {exc}") from None
    except ParseError as exc:
        raise UsageError(f"library: {exc}") from None
    report = reusability_report(m, lib)
    try:
        index = report.index
    except ReuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    doc = {
        "reused": report.reused,
        "total": report.total,
        "index": float(index),
        "ratio": f"{index.numerator}/{index.denominator}",
        "by_kind": {k: {"reused": r, "total": t} for k, (r, t) in report.by_kind().items()},
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.store, args.listen)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kmf", description="State/transition models: parse, plan, compile to PDDL, run.")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, fn, help_text, files=True):
        sp = sub.add_parser(name, help=help_text)
        if files:
            sp.add_argument("files", nargs="+", help=".kmf documents, merged in order")
            sp.add_argument("--rules", help=".kmf document whose rules block replaces the model's")
            sp.add_argument("--out", help="write output here instead of stdout")
        sp.set_defaults(fn=fn)
        return sp

    command("parse", cmd_parse, "parse and print in canonical form")
    sp = command("validate", cmd_validate, "check predicate use against the concept taxonomy")
    sp.add_argument("--taxonomy", help=".tax file (default: bundled transport taxonomy)")
    sp = command("plan", cmd_plan, "breadth-first plan from initial to goal, as JSON")
    sp.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="max expanded states")
    sp = command("gen-pddl", cmd_gen_pddl, "compile to a PDDL domain and problem")
    sp.add_argument("--name", help="domain name (default: stem of the first file)")
    sp = command("exec", cmd_exec, "simulate a run with scripted perturbations; prints the event log")
    sp.add_argument("--script", help="JSON perturbation script")
    sp.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="max expanded states per replan")
    sp.add_argument("--run-id", default="run")
    sp = command("metrics", cmd_metrics, "reusability index against a transition library")
    sp.add_argument("--library", help="library directory with MANIFEST.json (default: bundled)")
    sp = command("serve", cmd_serve, "run the HTTP API", files=False)
    sp.add_argument("--store", default="kmf-store", help="store directory")
    sp.add_argument("--listen", help="host:port (default: $KMF_LISTEN or 127.0.0.1:8080)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "bound", 1) < 1:
        print("error: --bound must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
