"""Command-line entry points.

Subcommands:
  run              simulate a scenario and write metrics/log/export artifacts
  validate         parse and validate a scenario, reporting problems
  export-dag       re-render intent DAGs from a saved run's state.json
  export-topology  re-render the topology export from a saved state.json

Exit codes: 0 success, 1 usage error, 2 parse/validation error, 3 runtime
error.  The IBNSIM_LOG environment variable (debug|info|warning) selects log
verbosity.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .errors import IbnError, ScenarioError
from .export import dot_from_document, write_run_artifacts
from .scenario import parse_scenario
from .simulation import Simulation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SCENARIO = 2
EXIT_RUNTIME = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ibnsim", description="intent-driven network simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--out", default="ibnsim-out", help="artifact directory")
    run.add_argument("--seed", type=int, default=None, help="override scenario seed")

    validate = sub.add_parser("validate", help="check a scenario file")
    validate.add_argument("scenario", help="scenario JSON file")

    export_dag = sub.add_parser("export-dag", help="re-render DAGs from a saved run")
    export_dag.add_argument("state", help="state.json written by run")
    export_dag.add_argument("--out", default=".", help="output directory")

    export_topo = sub.add_parser(
        "export-topology", help="re-render topology from a saved run"
    )
    export_topo.add_argument("state", help="state.json written by run")
    export_topo.add_argument("--out", default=".", help="output directory")
    return parser


def _configure_logging():
    level = os.environ.get("IBNSIM_LOG", "warning").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING}
    logging.basicConfig(level=levels.get(level, logging.WARNING))


def _load_scenario(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    return parse_scenario(text)


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    result = Simulation(scenario).run()
    written = write_run_artifacts(args.out, result)
    print(
        f"offered={result.metrics.offered} blocked={result.metrics.blocked} "
        f"installed={result.metrics.installed_ok} "
        f"recovered={result.metrics.failures_recovered}"
    )
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    _load_scenario(args.scenario)
    print(f"{args.scenario}: ok")
    return EXIT_OK


def _read_state(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path} is not valid JSON: {exc}") from None


def _cmd_export_dag(args) -> int:
    state = _read_state(args.state)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for did in sorted(state.get("dags", {})):
        path = out / f"dag_{did}.dot"
        path.write_text(dot_from_document(state["dags"][did]))
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_export_topology(args) -> int:
    state = _read_state(args.state)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "topology.json"
    path.write_text(json.dumps(state.get("topology", {}), indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "export-dag": _cmd_export_dag,
    "export-topology": _cmd_export_topology,
}


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"ibnsim: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"ibnsim: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except IbnError as exc:
        print(f"ibnsim: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
