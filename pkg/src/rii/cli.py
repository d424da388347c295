"""Command-line interface.

Exit codes: 0 success (or member), 1 non-member, 2 input error, 3 no valid
threshold for the requested confidence, 4 empty region, 5 node limit reached.
Errors go to stderr as a single line ``error:<kind>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .applications import all_coordinate_intervals, hypothesis_test
from .coverage import b_grid, coverage_curve, curve_to_csv
from .errors import (
    EmptyRegionError,
    InvalidArgumentError,
    NodeLimitError,
    NoValidThresholdError,
    RIIError,
)
from .estimators import HUBER_DELTA, PREDICTORS, fit_huber, fit_predictor, predict
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment, with_overrides
from .milp.encode import METHODS, encode_region, write_lp
from .milp.model import Sense
from .region import (
    Dataset,
    RegionSpec,
    build_region,
    count_hits,
    residual_intervals,
    split_dataset,
)
from .synth import NOISE_KINDS, NoiseSpec

EXIT_OK = 0
EXIT_NOT_MEMBER = 1
EXIT_INPUT = 2
EXIT_NO_THRESHOLD = 3
EXIT_EMPTY = 4
EXIT_NODE_LIMIT = 5

log = logging.getLogger("rii")


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_region(path: str) -> RegionSpec:
    try:
        return RegionSpec.load(path)
    except OSError as exc:
        raise CliError("input", f"cannot read region file: {exc}", EXIT_INPUT) from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# -- subcommands ---------------------------------------------------------------

def cmd_region(args: argparse.Namespace) -> int:
    try:
        data = Dataset.from_csv(args.data)
    except OSError as exc:
        raise CliError("input", f"cannot read data file: {exc}", EXIT_INPUT) from None
    if not 1 <= args.n_te <= data.n:
        raise CliError("input", f"--n-te must lie in [1, {data.n}]", EXIT_INPUT)
    test, train = split_dataset(data, args.n_te, args.seed)
    if args.predictor == "huber":
        fit = fit_huber(train, delta=args.huber_delta, intercept=args.intercept)
    else:
        fit = fit_predictor(args.predictor, train, intercept=args.intercept)
    iv = residual_intervals(test, predict(fit, test.x))
    try:
        region = build_region(iv, args.alpha, args.b, k=args.k, big_m=args.big_m)
    except NoValidThresholdError as exc:
        raise CliError("no-threshold", str(exc), EXIT_NO_THRESHOLD) from None
    region.save(args.out)
    print(f"k={region.k} n_te={region.n_te} guaranteed_coverage={region.guaranteed_coverage:.10g}")
    return EXIT_OK


def cmd_member(args: argparse.Namespace) -> int:
    region = _load_region(args.region)
    theta = np.asarray(args.theta, dtype=np.float64)
    if theta.shape[0] != region.d:
        raise CliError("input", f"theta has length {theta.shape[0]}, region has d={region.d}",
                       EXIT_INPUT)
    hits = count_hits(region.intervals, theta)
    member = hits >= region.k
    print(f"C(theta)={hits} k={region.k} {'member' if member else 'non-member'}")
    return EXIT_OK if member else EXIT_NOT_MEMBER


def _dump_models(region: RegionSpec, prefix: str) -> None:
    for i in range(region.d):
        c = np.zeros(region.d)
        c[i] = 1.0
        for sense in (Sense.MINIMIZE, Sense.MAXIMIZE):
            write_lp(encode_region(region, c, sense), f"{prefix}_theta{i + 1}_{sense.value}.lp")


def cmd_intervals(args: argparse.Namespace) -> int:
    region = _load_region(args.region)
    if args.dump_lp:
        _dump_models(region, args.dump_lp)
    try:
        box = all_coordinate_intervals(region, args.node_limit, args.method)
    except EmptyRegionError as exc:
        raise CliError("empty", str(exc), EXIT_EMPTY) from None
    except NodeLimitError as exc:
        _write(args.out, exc.partial.to_csv())
        raise CliError("node-limit", f"{exc}; partial results marked incomplete",
                       EXIT_NODE_LIMIT) from None
    _write(args.out, box.to_csv())
    return EXIT_OK


def cmd_test(args: argparse.Namespace) -> int:
    region = _load_region(args.region)
    verdict = hypothesis_test(region, args.node_limit, args.method)
    _write(args.out, verdict.to_json() + "\n")
    if verdict.inconclusive:
        raise CliError("node-limit", "search stopped at the node limit; verdict inconclusive",
                       EXIT_NODE_LIMIT)
    if verdict.rejected:
        print(f"region empty: null hypothesis rejected at alpha={region.alpha}", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


def cmd_coverage_curve(args: argparse.Namespace) -> int:
    rows = coverage_curve(args.n_te, args.k, b_grid(args.points))
    _write(args.out, curve_to_csv(rows))
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    if args.config:
        try:
            cfg = ExperimentConfig.from_json(Path(args.config).read_text())
        except OSError as exc:
            raise CliError("input", f"cannot read config: {exc}", EXIT_INPUT) from None
        except json.JSONDecodeError as exc:
            raise CliError("input", f"config is not valid JSON: {exc}", EXIT_INPUT) from None
    elif args.experiment:
        cfg = ExperimentConfig(args.experiment)
    else:
        raise CliError("input", "give --config or --experiment", EXIT_INPUT)
    noise = None
    if args.noise is not None:
        noise = NoiseSpec(args.noise)
    cfg = with_overrides(
        cfg, d=args.d, n_train=args.n_train, n_te=args.n_te, k=args.k, alpha=args.alpha,
        b=args.b, noise=noise, predictor=args.predictor, trials=args.trials, seed=args.seed,
        v_star=args.v_star, node_limit=args.node_limit, method=args.method,
        workers=args.workers,
    )
    if args.fixed_theta:
        cfg = with_overrides(cfg, resample_theta=False)
    summary = run_experiment(cfg, args.out_dir)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rii", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("region", help="build a region from a CSV with header x1..xd,y")
    p.add_argument("data")
    p.add_argument("--out", required=True)
    p.add_argument("--n-te", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--b", type=float, default=0.5)
    p.add_argument("--k", type=int, default=None, help="override k_alpha")
    p.add_argument("--big-m", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--predictor", choices=PREDICTORS, default="ols")
    p.add_argument("--huber-delta", type=float, default=HUBER_DELTA)
    p.add_argument("--intercept", action="store_true")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("member", help="test whether theta lies in the region")
    p.add_argument("region")
    p.add_argument("--theta", type=_floats, required=True)
    p.set_defaults(func=cmd_member)

    for name, func, helptext in (("intervals", cmd_intervals, "coordinate confidence intervals"),
                                 ("test", cmd_test, "hypothesis test via region emptiness")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("region")
        p.add_argument("--out", default=None)
        p.add_argument("--node-limit", type=int, default=200_000)
        p.add_argument("--method", choices=METHODS, default="auto")
        if name == "intervals":
            p.add_argument("--dump-lp", metavar="PREFIX", default=None,
                           help="also write each coordinate MILP in LP format")
        p.set_defaults(func=func)

    p = sub.add_parser("coverage-curve", help="S_n(k, b) over a grid of b in [0, 0.5]")
    p.add_argument("--n-te", type=int, default=30)
    p.add_argument("--k", type=_ints, default=[4, 8, 12, 16])
    p.add_argument("--points", type=int, default=51)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_coverage_curve)

    p = sub.add_parser("experiment", help="run a synthetic experiment")
    p.add_argument("--config", default=None, help="JSON ExperimentConfig")
    p.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    p.add_argument("--out-dir", default="runs")
    p.add_argument("--d", type=int)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-te", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--noise", choices=NOISE_KINDS)
    p.add_argument("--predictor", choices=PREDICTORS)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--v-star", type=float)
    p.add_argument("--node-limit", type=int)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--workers", type=int)
    p.add_argument("--fixed-theta", action="store_true", help="share one theta_star across trials")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error:{exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except InvalidArgumentError as exc:
        print(f"error:input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RIIError as exc:
        print(f"error:internal: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
