# src/cli.py
"""
mixfit command line.

    python -m src.cli synth --preset paper-poisson --out counts.csv
    python -m src.cli fit counts.csv --data-format freq --family poisson --k 3 --out model.json --trace trace.csv
    python -m src.cli cluster data.csv --model model.json --out labels.csv
    python -m src.cli eval --model model.json --grid=-15:15:10000 --out density.csv
    python -m src.cli selfcheck

Exit codes: 0 success, 1 self-check failure, 2 usage/parse/IO error, 3 fit error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from src.clustering import LABEL_RULES
from src.distributions import FAMILIES
from src.errors import FitError, MixtureError
from src.graph_builder import load_workflow
from src.persistence.data_files import DATA_FORMATS
from src.presets import PRESETS
from src.runner import command_defaults, run_command
from src.state import format_event

EXIT_OK = 0
EXIT_SELFCHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_FIT = 3

_GLOBAL_KEYS = ("command", "verbose", "log_json", "workflow")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixfit", description="Finite mixture fitting by EM")
    parser.add_argument("--workflow", default=None, help="workflow.json path (default: $MIXFIT_WORKFLOW or configs/workflow.json)")
    parser.add_argument("--verbose", action="store_true", help="print structured log events to stderr")
    parser.add_argument("--log-json", default=None, metavar="PATH", help="write structured log events as JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic data file")
    source = synth.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", choices=PRESETS)
    source.add_argument("--spec", metavar="PATH", help="JSON synth spec (subsets or mixture form)")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--out", required=True)
    synth.add_argument("--labels", default=None, metavar="PATH", help="also write generating component labels")

    fit = sub.add_parser("fit", help="fit a K-component mixture by EM")
    fit.add_argument("data")
    fit.add_argument("--data-format", choices=DATA_FORMATS, default=None)
    fit.add_argument("--family", choices=FAMILIES, required=True)
    fit.add_argument("--k", type=int, required=True)
    fit.add_argument("--tol", type=float, default=None)
    fit.add_argument("--max-iters", type=int, default=None)
    fit.add_argument("--restarts", type=int, default=None)
    fit.add_argument("--seed", type=int, default=None)
    fit.add_argument("--threads", type=int, default=None)
    fit.add_argument("--degenerate-policy", choices=("error", "reinit"), default=None)
    fit.add_argument("--init", default=None, metavar="MODEL", help="start a single run from this model file")
    fit.add_argument("--trace", default=None, metavar="PATH")
    fit.add_argument("--out", required=True)
    fit.add_argument("--baseline-mle", action="store_true", default=None, help="also write the K=1 MLE model")
    fit.add_argument("--no-sort", action="store_true", default=None, help="keep raw component order")

    cluster = sub.add_parser("cluster", help="label observations with a fitted model")
    cluster.add_argument("data")
    cluster.add_argument("--model", required=True)
    cluster.add_argument("--data-format", choices=DATA_FORMATS, default=None)
    cluster.add_argument("--rule", choices=LABEL_RULES, default=None)
    cluster.add_argument("--out", required=True)

    ev = sub.add_parser("eval", help="tabulate weighted component and mixture densities")
    ev.add_argument("--model", required=True)
    where = ev.add_mutually_exclusive_group(required=True)
    where.add_argument("--grid", metavar="MIN:MAX:STEPS", help="steps+1 evenly spaced points; write --grid=-5:5:100 for a negative MIN")
    where.add_argument("--points", metavar="PATH")
    ev.add_argument("--out", required=True)

    sub.add_parser("selfcheck", help="run the embedded oracle checks")
    return parser


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, FitError):
        return EXIT_FIT
    if isinstance(exc, (MixtureError, ValueError, OSError)):
        return EXIT_USAGE
    raise exc


def _emit_logs(logs: List[Dict[str, Any]], verbose: bool, log_json: Optional[str]) -> None:
    if verbose:
        for i, e in enumerate(logs, start=1):
            print(format_event(i, e), file=sys.stderr)
    if log_json:
        Path(log_json).write_text(json.dumps(logs, indent=2, default=str), encoding="utf-8")


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)

    try:
        workflow = load_workflow(args.workflow)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    flags = {k: v for k, v in vars(args).items() if v is not None and k not in _GLOBAL_KEYS}
    options = {**command_defaults(workflow, args.command), **flags}

    state = run_command(workflow, args.command, options)
    _emit_logs(state.get("logs", []), args.verbose, args.log_json)

    error = state.get("error")
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
        return exit_code_for(error)

    for line in state.get("summary", []):
        print(line)
    return int(state.get("exit_code", EXIT_OK))


if __name__ == "__main__":
    sys.exit(main())
