"""Bench command line: instance generation, experiment sweeps and exponent fits.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 when
``run --assert`` finds a failed acceptance check.
"""
import argparse
import json
import sys
from typing import Any, Dict, List, Optional, Sequence

import structlog

from sublinear import __version__
from sublinear.core.exceptions import SublinearError
from sublinear.core.logging import setup_logging
from sublinear.schemas.common import parse_schema
from sublinear.schemas.params import SetCoverParams, SteinerParams
from sublinear.services.experiment_runner import load_spec, run_experiment
from sublinear.services.exponent_fit import fit_exponent
from sublinear.services.generators import MetricKind, SetSystemKind, generate_metric, generate_set_system
from sublinear.services.oracles import DistanceOracle, MembershipOracle
from sublinear.services.setcover_estimator import estimate_thsc, estimate_thsc_no_pairs
from sublinear.services.steiner_estimator import estimate_steiner
from sublinear.utils.file_utils import FileManager

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ASSERTION = 2


def _parse_options(pairs: Optional[List[str]]) -> Dict[str, Any]:
    """key=value pairs; values are read as JSON when possible"""
    options: Dict[str, Any] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise argparse.ArgumentTypeError(f"expected key=value, got {pair!r}")
        try:
            options[key] = json.loads(value)
        except json.JSONDecodeError:
            options[key] = value
    return options


def _emit(payload: Any) -> None:
    if hasattr(payload, "model_dump_json"):
        print(payload.model_dump_json(indent=2))
    else:
        print(json.dumps(payload, indent=2))


def cmd_gen_sets(args: argparse.Namespace) -> int:
    system = generate_set_system(args.kind, args.k, args.n, args.seed, **_parse_options(args.param))
    path = FileManager.save_set_system(system, args.out)
    logger.info("Set system written", path=str(path), k=system.k, n=system.n)
    return EXIT_OK


def cmd_gen_metric(args: argparse.Namespace) -> int:
    metric = generate_metric(
        args.kind,
        args.n_pts,
        terminal_fraction=args.terminal_fraction,
        seed=args.seed,
        n_terminals=args.n_terminals,
        **_parse_options(args.param),
    )
    path = FileManager.save_metric(metric, args.out)
    logger.info("Metric written", path=str(path), n_pts=metric.n_points, k=metric.k)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec)
    seeds = [args.seed] if args.seed is not None else None
    summary = run_experiment(spec, jobs=args.jobs, output=args.out, seeds=seeds)
    _emit(summary)
    if args.check and summary.assertion_passed is False:
        for message in summary.messages:
            logger.error("Acceptance check failed", experiment=spec.name, detail=message)
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    _emit(fit_exponent(args.csv, args.x, args.y, args.deflate))
    return EXIT_OK


def cmd_thsc(args: argparse.Namespace) -> int:
    system = FileManager.load_set_system(args.instance)
    params = parse_schema(
        SetCoverParams,
        {"seed": args.seed, **_parse_options(args.param)},
    )
    estimator = estimate_thsc_no_pairs if args.no_pairs else estimate_thsc
    _emit(estimator(MembershipOracle(system), params))
    return EXIT_OK


def cmd_steiner(args: argparse.Namespace) -> int:
    metric = FileManager.load_metric(args.instance)
    params = parse_schema(SteinerParams, {"seed": args.seed, **_parse_options(args.param)})
    _emit(estimate_steiner(DistanceOracle(metric), params))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sublinear", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    gen_sets = sub.add_parser("gen-sets", help="write a generated set system as JSON")
    gen_sets.add_argument("--kind", choices=[k.value for k in SetSystemKind], required=True)
    gen_sets.add_argument("--k", type=int, required=True)
    gen_sets.add_argument("--n", type=int, required=True)
    gen_sets.add_argument("--seed", type=int, default=0)
    gen_sets.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator option")
    gen_sets.add_argument("--out", required=True)
    gen_sets.set_defaults(handler=cmd_gen_sets)

    gen_metric = sub.add_parser("gen-metric", help="write a generated metric instance as JSON")
    gen_metric.add_argument("--kind", choices=[k.value for k in MetricKind], required=True)
    gen_metric.add_argument("--n-pts", type=int, required=True)
    gen_metric.add_argument("--terminal-fraction", type=float, default=0.5)
    gen_metric.add_argument("--n-terminals", type=int, default=None)
    gen_metric.add_argument("--seed", type=int, default=0)
    gen_metric.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator option")
    gen_metric.add_argument("--out", required=True)
    gen_metric.set_defaults(handler=cmd_gen_metric)

    run = sub.add_parser("run", help="execute an experiment spec")
    run.add_argument("--spec", required=True)
    run.add_argument("--seed", type=int, default=None, help="run this seed only")
    run.add_argument("--jobs", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--assert", dest="check", action="store_true",
                     help="exit 2 when the acceptance block fails")
    run.set_defaults(handler=cmd_run)

    fit = sub.add_parser("fit", help="log-log slope of a CSV column pair")
    fit.add_argument("--csv", required=True)
    fit.add_argument("--x", default="n")
    fit.add_argument("--y", default="queries_membership")
    fit.add_argument("--deflate", type=float, default=3.0, help="divide y by ln(x)^p first")
    fit.set_defaults(handler=cmd_fit)

    thsc = sub.add_parser("thsc", help="estimate k - SC for one instance file")
    thsc.add_argument("--instance", required=True)
    thsc.add_argument("--seed", type=int, default=0)
    thsc.add_argument("--no-pairs", action="store_true", help="ignore sets of size two")
    thsc.add_argument("--param", action="append", metavar="KEY=VALUE", help="SetCoverParams field")
    thsc.set_defaults(handler=cmd_thsc)

    steiner = sub.add_parser("steiner", help="estimate the Steiner tree weight for one metric file")
    steiner.add_argument("--instance", required=True)
    steiner.add_argument("--seed", type=int, default=0)
    steiner.add_argument("--param", action="append", metavar="KEY=VALUE", help="SteinerParams field")
    steiner.set_defaults(handler=cmd_steiner)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level)
    try:
        return args.handler(args)
    except (SublinearError, argparse.ArgumentTypeError) as e:
        logger.error("Command failed", command=args.command, error=str(e))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
