"""Command-line front end: single runs, Monte Carlo sweeps, property self-tests."""

import argparse
import sys

from . import driver, experiments, selftest
from .driver import NumericFailureError
from .experiments import ConfigError

EXIT_OK = 0
EXIT_SELFTEST_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _cmd_run(args):
    scenario, _ = experiments.load_config(args.config)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    result = driver.run(scenario)
    if args.trace:
        experiments.write_trace(result, args.trace)
    print(f"sum_rate={result.sum_rate:.6f} bits/s/Hz "
          f"iters={result.iterations} wall={result.wall_time_s:.3f}s")
    return EXIT_OK


def _cmd_sweep(args):
    _, spec = experiments.load_config(args.config)
    if spec is None:
        raise ConfigError("sweep: missing section (required by the sweep command)")
    rows = experiments.run_sweep(spec, workers=args.workers)
    experiments.write_rows(rows, args.out)
    record = experiments.summarize(spec, rows, args.out)
    experiments.write_summary(record, args.out + ".summary.json")
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _cmd_selftest(args):
    failed = selftest.run_all()
    if failed is not None:
        print(f"FAILED: {failed}")
        return EXIT_SELFTEST_FAIL
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bdris",
        description="Joint precoder and beyond-diagonal RIS sum-rate optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimize one configured scenario")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trace", default=None, help="write per-iteration CSV here")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo sweep to CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=None,
                         help=f"worker processes (default: ${experiments.WORKERS_ENV} or all cores)")
    p_sweep.set_defaults(func=_cmd_sweep)

    for name in ("selftest", "gradcheck"):
        p_st = sub.add_parser(name, help="run the built-in property suites")
        p_st.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
