"""Command-line interface: one-off projections and the benchmark experiments."""

import argparse
import json
import os
import sys

import numpy as np

from .bench import ConfigError, config_from_dict, default_config, run_experiment
from .core import CONVERGED, ProblemInstance, TRIVIAL_INSIDE_BALL, SolverOptions, csum
from .irbp import solve
from .rs import RsOptions, rs_solve


def _parse_y(spec: str) -> np.ndarray:
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
    else:
        text = spec
    parts = [tok for tok in text.replace(",", " ").split() if tok]
    try:
        return np.asarray([float(tok) for tok in parts])
    except ValueError as exc:
        raise ConfigError(f"could not parse y: {exc}") from exc


def _cmd_solve(args) -> int:
    try:
        y = _parse_y(args.y)
        instance = ProblemInstance(y=y, p=args.p, gamma=args.gamma)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.solver == "irbp":
        report = solve(instance, SolverOptions(seed=args.seed))
    else:
        report = rs_solve(instance, RsOptions(seed=args.seed))
    ok = report.status in (CONVERGED, TRIVIAL_INSIDE_BALL)
    if args.json:
        payload = {
            "solver": args.solver,
            "status": report.status,
            "iterations": report.iterations,
            "x": list(report.x_final),
            "lambda": report.lambda_final,
            "objective": 0.5 * csum((report.x_final - instance.y) ** 2),
            "alpha_bar": report.alpha_bar_final,
            "beta": report.beta_final,
            "wall_time_s": report.wall_time,
        }
        print(json.dumps(payload, indent=2))
    else:
        print(f"status: {report.status}  iterations: {report.iterations}  "
              f"lambda: {report.lambda_final:.6g}  time: {report.wall_time:.4g}s")
        print("x:", " ".join(format(v, ".12g") for v in report.x_final))
    return 0 if ok else 1


def _cmd_bench(args) -> int:
    try:
        if args.config:
            with open(args.config) as fh:
                data = json.load(fh)
            config = config_from_dict(data, experiment=args.experiment, output_dir=args.out)
        else:
            config = default_config(args.experiment, output_dir=args.out)
    except (OSError, json.JSONDecodeError, ConfigError, TypeError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    ok = run_experiment(config)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpball", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="project a point onto an lp ball")
    p_solve.add_argument("--y", required=True, help="file with coordinates, or inline CSV like '0.5,0.45'")
    p_solve.add_argument("--p", type=float, required=True)
    p_solve.add_argument("--gamma", type=float, required=True)
    p_solve.add_argument("--solver", choices=["irbp", "rs"], default="irbp")
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--json", action="store_true")
    p_solve.set_defaults(func=_cmd_solve)

    p_bench = sub.add_parser("bench", help="run a benchmark experiment")
    p_bench.add_argument("--experiment", choices=["path2d", "profile", "scaling", "sensitivity"], required=True)
    p_bench.add_argument("--config", default=None, help="JSON config overriding the experiment defaults")
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
