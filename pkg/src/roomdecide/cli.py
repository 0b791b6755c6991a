"""Command-line interface.

Results go to stdout as JSON or CSV, logs and error messages to stderr.
Exit status: 0 on success, 1 when an input fails validation or cannot be
loaded, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from typing import Sequence

from . import __version__, templates
from .agents import default_heating_bindings
from .decision.io import FormatError, load_model
from .decision.model import InfluenceDiagram, InvalidDiagramError, validate_diagram
from .decision.tree import MalformedTreeError, evaluate_diagram, fold_back
from .pronouncer import PronouncerError
from .scenario import ScenarioError, default_week_path, load_scenario
from .simulator import (
    ConfigError,
    compare,
    load_config,
    read_metrics,
    run,
    run_baseline,
    write_metrics,
    write_trace,
)

log = logging.getLogger("roomdecide")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2

# errors that mean "the input is bad", reported with exit status 1
INPUT_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    FormatError,
    ScenarioError,
    ConfigError,
    InvalidDiagramError,
    MalformedTreeError,
    PronouncerError,
)


def _emit(obj: dict, fmt: str) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(obj.keys())
        w.writerow(obj.values())
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _scenario(args):
    s = load_scenario(args.scenario or default_week_path())
    if args.seed is not None:
        s = dataclasses.replace(s, seed=args.seed)
    return s


def _finish_run(metrics, trace, args) -> int:
    if args.out_trace:
        write_trace(trace, args.out_trace)
    if args.out_metrics:
        write_metrics(metrics, args.out_metrics)
    else:
        _emit(metrics.to_dict(), args.format)
    return EXIT_OK


def cmd_simulate(args) -> int:
    s = _scenario(args)
    metrics, trace = run(s, load_config(args.config))
    log.info("simulated %d ticks, %.3f kWh", len(trace), metrics.heating_energy)
    return _finish_run(metrics, trace, args)


def cmd_baseline(args) -> int:
    s = _scenario(args)
    metrics, trace = run_baseline(s, load_config(args.config), args.setpoint)
    log.info("baseline at %.1f degC: %.3f kWh", args.setpoint, metrics.heating_energy)
    return _finish_run(metrics, trace, args)


def cmd_compare(args) -> int:
    try:
        agent, baseline = read_metrics(args.agent), read_metrics(args.baseline)
    except (json.JSONDecodeError, TypeError) as exc:
        raise FormatError(f"unreadable metrics file: {exc}") from None
    try:
        savings = compare(agent, baseline)
    except ZeroDivisionError as exc:
        raise FormatError(str(exc)) from None
    _emit(savings.to_dict(), args.format)
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.diagram)
    if isinstance(model, InfluenceDiagram):
        report = validate_diagram(model)
        if not report.ok:
            _emit_report(report.to_dict())
            return EXIT_INVALID
        ev = evaluate_diagram(model)
    else:
        ev = fold_back(model)
    sys.stdout.write(json.dumps(ev.to_dict(), indent=2) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    p = templates.default_pronouncer()
    p.template(args.template)  # fail early on unknown templates
    if args.template != templates.HEATING:
        raise PronouncerError(f"no default bindings for template {args.template!r}")
    stats = p.benchmark(args.template, default_heating_bindings(args.seed), args.runs,
                        warmup=args.warmup)
    if args.format == "json":
        _emit(dataclasses.asdict(stats), "json")
    else:
        sys.stdout.write("runs,mean_ms,stddev_ms\n" if args.header else "")
        sys.stdout.write(stats.csv_row() + "\n")
    return EXIT_OK


def _emit_report(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")
    for v in report["violations"]:
        log.error("%s: %s: %s", v["node"], v["rule"], v["message"])


def cmd_validate(args) -> int:
    if args.diagram:
        model = load_model(args.diagram)
        if isinstance(model, InfluenceDiagram):
            report = validate_diagram(model).to_dict()
        else:
            try:
                fold_back(model)
                report = {"ok": True, "violations": []}
            except MalformedTreeError as exc:
                report = {"ok": False,
                          "violations": [{"node": "tree", "rule": "malformed", "message": str(exc)}]}
    else:
        try:
            load_scenario(args.scenario)
            report = {"ok": True, "violations": []}
        except ScenarioError as exc:
            report = {"ok": False, "violations": [
                {"node": "scenario", "rule": "scenario", "message": m} for m in exc.problems
            ]}
    _emit_report(report)
    return EXIT_OK if report["ok"] else EXIT_INVALID


def _positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _non_negative_int(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roomdecide", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more logging on stderr (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def run_options(p):
        p.add_argument("--scenario", help="scenario JSON (default: the shipped default week)")
        p.add_argument("--config", help="simulation config JSON")
        p.add_argument("--out-trace", help="write the per-tick trace CSV here")
        p.add_argument("--out-metrics", help="write metrics JSON here instead of stdout")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("simulate", help="run the agent-controlled building")
    run_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("baseline", help="run a constant-setpoint thermostat")
    run_options(p)
    p.add_argument("--setpoint", type=float, default=22.0)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("compare", help="energy savings of one metrics file over another")
    p.add_argument("agent", help="metrics JSON of the agent run")
    p.add_argument("baseline", help="metrics JSON of the baseline run")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("eval", help="solve an influence diagram or decision tree")
    p.add_argument("--diagram", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time set-and-evaluate runs of a template")
    p.add_argument("--template", default=templates.HEATING)
    p.add_argument("--runs", type=_positive_int, default=10000)
    p.add_argument("--warmup", type=_non_negative_int, default=0)
    p.add_argument("--seed", type=int, default=0, help="seed for the sampled bindings")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--header", action="store_true", help="print a CSV header line first")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check a scenario or diagram file")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--scenario")
    target.add_argument("--diagram")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    # a handler per call so repeated in-process calls see the current stderr
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel((logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)])
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    finally:
        log.removeHandler(handler)

if __name__ == "__main__":
    sys.exit(main())
