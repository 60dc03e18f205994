"""Command-line front end.

``chemactors run <scenario>`` executes a scenario, prints its verdict
summary, optionally writes the tab-separated trace file and a swimlane
figure, and exits 0 exactly when every verdict is OK.  ``validate`` checks a
protocol document, ``check`` replays a trace file against one, and ``specs``
lists the documents shipped with the package.  Wherever a document is
expected, a built-in name (``buffer-single``, ``buffer-pc``, ``bookshop``)
works as well as a path.
"""

from __future__ import annotations

import argparse
import sys

from .errors import BudgetExhausted, DocumentError
from .protocol_spec import (ProtocolSpec, check_trace, handled_events,
                            load_spec_file, split_by_client)
from .runtime import parse_trace
from .scenarios import (CHEMICAL_VARIANTS, CORRUPTIONS, MODES, POLICIES,
                        SCENARIOS, ScenarioConfig, builtin_spec_names,
                        run_scenario, spec_path)


def _resolve_spec(name_or_path: str) -> str:
    if name_or_path in builtin_spec_names():
        return spec_path(name_or_path)
    return name_or_path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemactors",
        description="Typestate-checked actors with chemical mailbox semantics.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and report verdicts")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--producers", type=int, default=1)
    run.add_argument("--consumers", type=int, default=2)
    run.add_argument("--items", type=int, default=5)
    run.add_argument("--users", type=int, default=3)
    run.add_argument("--policy", choices=POLICIES, default=None,
                     help="bookshop serving policy")
    run.add_argument("--chemical", choices=CHEMICAL_VARIANTS, default="stash",
                     help="stash flush variant: prepend (stash) or tail resend")
    run.add_argument("--affine", choices=("on", "off"), default="on",
                     help="hand out use-at-most-once references")
    run.add_argument("--max-steps", type=int, default=10_000)
    run.add_argument("--mode", choices=MODES, default="deterministic")
    run.add_argument("--corrupt", choices=CORRUPTIONS, default=None,
                     help="inject a deliberately broken client session")
    run.add_argument("--trace-out", metavar="FILE", default=None,
                     help="write the tab-separated trace here")
    run.add_argument("--figure-out", metavar="FILE", default=None,
                     help="render a swimlane figure of the trace here")

    validate = sub.add_parser("validate", help="load and validate a document")
    validate.add_argument("spec", help="document path or built-in name")

    check = sub.add_parser("check", help="replay a trace file against a document")
    check.add_argument("spec", help="document path or built-in name")
    check.add_argument("trace", help="trace file produced by `run --trace-out`")
    check.add_argument("--per-client", action="store_true",
                       help="check each client's projection instead of the "
                            "global handled sequence")

    sub.add_parser("specs", help="list built-in documents")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = ScenarioConfig(
        scenario=args.scenario,
        seed=args.seed,
        producers=args.producers,
        consumers=args.consumers,
        items=args.items,
        users=args.users,
        policy=args.policy or "serialize-users",
        chemical_variant=args.chemical,
        affine=args.affine == "on",
        max_steps=args.max_steps,
        mode=args.mode,
        corrupt=args.corrupt,
    )
    if args.policy is not None and args.scenario != "bookshop":
        print("error: --policy only applies to the bookshop scenario",
              file=sys.stderr)
        return 2
    try:
        report = run_scenario(config)
    except (BudgetExhausted, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    for line in report.summary_lines():
        print(line)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.trace_text())
        print("trace written to %s" % args.trace_out)
    if args.figure_out:
        from .report import render_trace_figure
        render_trace_figure(report.steps, args.figure_out,
                            title="%s (seed %d)" % (report.scenario, report.seed))
        print("figure written to %s" % args.figure_out)
    return 0 if report.all_ok() else 1


def _cmd_validate(args: argparse.Namespace) -> int:
    path = _resolve_spec(args.spec)
    try:
        spec = load_spec_file(path)
    except DocumentError as exc:
        print("INVALID: %s" % exc, file=sys.stderr)
        return 1
    print("OK: %s (%d states, %d kinds, roles: %s)"
          % (spec.name, len(spec.states), len(spec.messages),
             ", ".join(sorted(spec.client_tables)) or "-"))
    return 0


def _check_one(spec: ProtocolSpec, label: str, events) -> bool:
    verdict = check_trace(spec, events)
    print("%s: %s" % (label, verdict))
    return verdict.ok


def _cmd_check(args: argparse.Namespace) -> int:
    path = _resolve_spec(args.spec)
    try:
        spec = load_spec_file(path)
    except DocumentError as exc:
        print("INVALID: %s" % exc, file=sys.stderr)
        return 1
    try:
        with open(args.trace, "r", encoding="utf-8") as fh:
            steps = parse_trace(fh.read())
    except (OSError, ValueError) as exc:
        print("error: cannot read trace: %s" % exc, file=sys.stderr)
        return 2
    events = handled_events(steps, spec)
    if args.per_client:
        ok = True
        for client, client_events in split_by_client(events).items():
            ok = _check_one(spec, "client %s" % (client or "-"), client_events) and ok
        return 0 if ok else 1
    return 0 if _check_one(spec, "trace", events) else 1


def _cmd_specs(_args: argparse.Namespace) -> int:
    for name in builtin_spec_names():
        print("%s\t%s" % (name, spec_path(name)))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate,
               "check": _cmd_check, "specs": _cmd_specs}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
