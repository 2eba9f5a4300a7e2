import argparse
import sys
from pathlib import Path
from typing import List, Optional

import orjson
import structlog

from bitrel import __version__
from bitrel.api import commands
from bitrel.core.config import load_settings, parse_window
from bitrel.exceptions.custom_exceptions import BitrelException, InternalError
from bitrel.models.schemas import Statistic, TraceFormat, UndefinedPolicy
from bitrel.utils.logging import configure_logging

logger = structlog.get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="dotenv file of BITREL_* settings")
    common.add_argument("--out", type=Path, help="output directory (default: bitrel-out)")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR or CRITICAL")
    common.add_argument("--debug", action="store_true", default=None, help="human-readable console logs")

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("--seed", type=int, help="master seed (default: 0)")
    corpus.add_argument("--systems", type=int, help="number of systems (default: 1000)")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--samples", type=int, help="samples per system (default: 10000)")
    sampling.add_argument("--format", choices=[f.value for f in TraceFormat], help="trace file format")

    estimating = argparse.ArgumentParser(add_help=False)
    estimating.add_argument("--metrics", help="comma-separated metric names (default: all six)")
    estimating.add_argument("--window", metavar="START:END", help="score only samples in [START, END)")

    scoring = argparse.ArgumentParser(add_help=False)
    scoring.add_argument("--policy", choices=[p.value for p in UndefinedPolicy], help="undefined score policy")

    reporting = argparse.ArgumentParser(add_help=False)
    reporting.add_argument("--by-type", action="store_true", help="also emit one curve set per system type")
    reporting.add_argument("--gridpoints", type=int, help="KDE grid size (default: 256)")

    parser = argparse.ArgumentParser(
        prog="bitrel",
        description="Pairwise relationship metrics for weighted binary event streams, scored on synthetic systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common, corpus], help="draw system specs")
    gen.set_defaults(handler=_gen)

    sim = sub.add_parser("sim", parents=[common, sampling], help="sample traces from spec files")
    sim.add_argument("specs", nargs="+", type=Path)
    sim.set_defaults(handler=_sim)

    est = sub.add_parser("est", parents=[common, estimating], help="build score matrices from trace files")
    est.add_argument("traces", nargs="+", type=Path)
    est.add_argument("--json", action="store_true", help="write matrices as JSON instead of CSV")
    est.set_defaults(handler=_est)

    score = sub.add_parser("score", parents=[common, scoring], help="score matrices against a spec")
    score.add_argument("spec", type=Path)
    score.add_argument("matrices", nargs="+", type=Path)
    score.set_defaults(handler=_score)

    report = sub.add_parser("report", parents=[common, reporting], help="density curves of one statistic")
    report.add_argument("results", nargs="+", type=Path)
    report.add_argument("--statistic", help=f"one of {', '.join(s.value for s in Statistic)}")
    report.add_argument("--clip-negative", action="store_true", help="plot only the non-negative x range")
    report.set_defaults(handler=_report)

    run = sub.add_parser("run", parents=[common, corpus, sampling, estimating, scoring, reporting],
                         help="gen, sim, est, score and report for a whole corpus")
    run.add_argument("--jobs", type=int, help="concurrent system pipelines (default: CPU count)")
    run.set_defaults(handler=_run)
    return parser


def _config(args: argparse.Namespace):
    settings = load_settings(args.config)
    configure_logging(args.log_level or settings.log_level, settings.debug if args.debug is None else args.debug)
    overrides = {
        name: getattr(args, name, None)
        for name in ("seed", "systems", "samples", "metrics", "policy", "out", "jobs", "format", "gridpoints")
    }
    overrides["window"] = parse_window(getattr(args, "window", None))
    return settings.run_config(**overrides)


# Handlers

def _gen(args):
    commands.cmd_gen(_config(args))


def _sim(args):
    commands.cmd_sim(args.specs, _config(args))


def _est(args):
    commands.cmd_est(args.traces, _config(args), as_json=args.json)


def _score(args):
    commands.cmd_score(args.spec, args.matrices, _config(args))


def _report(args):
    config = _config(args)
    statistic = commands.parse_statistic(args.statistic) if args.statistic else config.statistic
    commands.cmd_report(args.results, statistic, config, by_type=args.by_type, clip_negative=args.clip_negative)


def _run(args):
    commands.cmd_run(_config(args), by_type=args.by_type)


def _emit(error: BitrelException):
    sys.stderr.write(orjson.dumps(error.to_response().model_dump()).decode() + "\n")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        args.handler(args)
    except BitrelException as exc:
        logger.error("command_failed", command=args.command, code=exc.code, error=exc.message, details=exc.details)
        _emit(exc)
        return exc.exit_code
    except Exception as exc:
        logger.exception("unhandled_exception", command=args.command)
        error = InternalError(message=f"{type(exc).__name__}: {exc}")
        _emit(error)
        return error.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
