"""Experiment driver: instance generation, timing, CSV/JSON persistence.

Four canned experiments are provided:

* ``path2d``      -- trace every iterate of the 2-d showcase problem
* ``profile``     -- success ratio vs wall-clock for both solvers at n = 100
* ``scaling``     -- wall-clock of the reweighted solver across n = 1e3 .. 1e6
* ``sensitivity`` -- objective/residual stability over a (big_m, tau) grid

All floats are written with 17 significant digits so outputs round-trip
losslessly and runs with identical configs diff clean (timing columns aside).
"""

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    CONVERGED,
    ProblemInstance,
    RunReport,
    SolverOptions,
    TRIVIAL_INSIDE_BALL,
    csum,
    inside_ball,
)
from .irbp import solve
from .rs import RsOptions, rs_solve

RESULT_COLUMNS = [
    "experiment",
    "solver",
    "n",
    "p",
    "seed",
    "status",
    "iterations",
    "wall_time_s",
    "objective",
    "alpha_bar",
    "beta",
    "trigger_count",
]

TRACE_COLUMNS = [
    "iter",
    "x1",
    "x2",
    "eps1",
    "eps2",
    "w1",
    "w2",
    "gamma_k",
    "lambda",
    "alpha",
    "alpha_bar",
    "beta",
    "triggered",
    "p",
    "gamma",
]

_OK_STATUSES = {CONVERGED, TRIVIAL_INSIDE_BALL}


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2)."""


@dataclass
class ResultRow:
    """One (solver, instance) run, in the fixed CSV column order."""

    experiment: str
    solver: str
    n: int
    p: float
    seed: int
    status: str
    iterations: int
    wall_time_s: float
    objective: float
    alpha_bar: float
    beta: float
    trigger_count: int

    def as_list(self) -> list:
        return [getattr(self, name) for name in RESULT_COLUMNS]

    @property
    def succeeded(self) -> bool:
        return self.status in _OK_STATUSES


@dataclass
class ExperimentConfig:
    experiment: str
    n_list: list = field(default_factory=list)
    p_list: list = field(default_factory=list)
    gamma: float = 1.0
    num_instances: int = 1
    seeds: list = field(default_factory=list)
    solver_opts: SolverOptions = field(default_factory=SolverOptions)
    rs_opts: RsOptions = field(default_factory=RsOptions)
    output_dir: str = "bench_out"
    audit: bool = True
    m_list: list = field(default_factory=lambda: [10.0, 100.0, 1000.0, 10000.0])
    tau_list: list = field(default_factory=lambda: [1.01, 1.1, 1.5, 1.8])
    y0: list = field(default_factory=lambda: [0.5, 0.45])
    eps0: list = field(default_factory=lambda: [0.072, 0.463])

    def __post_init__(self):
        if self.experiment not in ("path2d", "profile", "scaling", "sensitivity"):
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.n_list or not self.p_list:
            raise ConfigError("n_list and p_list must be nonempty")
        if self.num_instances < 1:
            raise ConfigError("num_instances must be at least 1")
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")
        if not self.seeds:
            self.seeds = [1000 + i for i in range(self.num_instances)]


def default_config(experiment: str, output_dir: str = "bench_out") -> ExperimentConfig:
    if experiment == "path2d":
        return ExperimentConfig(
            experiment="path2d", n_list=[2], p_list=[0.5], num_instances=1, output_dir=output_dir
        )
    if experiment == "profile":
        return ExperimentConfig(
            experiment="profile",
            n_list=[100],
            p_list=[0.4, 0.8],
            num_instances=100,
            output_dir=output_dir,
        )
    if experiment == "scaling":
        return ExperimentConfig(
            experiment="scaling",
            n_list=[10**3, 10**4, 10**5, 10**6],
            p_list=[0.4, 0.8],
            num_instances=20,
            audit=False,
            output_dir=output_dir,
        )
    if experiment == "sensitivity":
        return ExperimentConfig(
            experiment="sensitivity",
            n_list=[10**5],
            p_list=[0.5],
            num_instances=20,
            audit=False,
            output_dir=output_dir,
        )
    raise ConfigError(f"unknown experiment {experiment!r}")


def config_from_dict(data: dict, experiment: str | None = None, output_dir: str | None = None) -> ExperimentConfig:
    """Build a config from JSON data layered over the experiment defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    name = experiment or data.get("experiment")
    if name is None:
        raise ConfigError("missing experiment name")
    cfg = default_config(name, output_dir=output_dir or data.get("output_dir", "bench_out"))
    plain = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"solver_opts", "rs_opts", "experiment"}
    try:
        for key, value in data.items():
            if key == "experiment":
                continue
            if key == "solver_opts":
                cfg.solver_opts = SolverOptions(**value)
            elif key == "rs_opts":
                cfg.rs_opts = RsOptions(**value)
            elif key in plain:
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if output_dir is not None:
        cfg.output_dir = output_dir
    cfg.__post_init__()
    return cfg


def gen_instance(n: int, p: float, gamma: float, seed: int) -> ProblemInstance:
    """Draw y with i.i.d. N(gamma/n, sqrt(gamma/n)) entries, redrawn until the
    point lies strictly outside the ball.

    The variance scaling puts the zero-vector objective at sqrt(n * gamma)/2
    regardless of n, which keeps runs comparable across sizes.
    """
    if n < 1:
        raise ConfigError("n must be at least 1")
    rng = np.random.default_rng(seed)
    sigma = (gamma / n) ** 0.25
    for _ in range(100):
        y = rng.normal(gamma / n, sigma, size=n)
        instance = ProblemInstance(y=y, p=p, gamma=gamma)
        if not inside_ball(instance):
            return instance
    raise ConfigError(f"no instance outside the ball after 100 draws (n={n}, p={p}, gamma={gamma})")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, columns: list, rows: list):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=lambda o: dataclasses.asdict(o))
        fh.write("\n")


def _echo_config(outdir: Path, config: ExperimentConfig):
    data = dataclasses.asdict(config)
    _write_json(outdir / "config_echo.json", data)


def _run_one(solver: str, instance: ProblemInstance, config: ExperimentConfig, seed: int,
             solver_opts: SolverOptions | None = None) -> tuple:
    """Run one solver on one instance; wall time is measured around the solve
    call only."""
    if solver == "irbp":
        opts = solver_opts or dataclasses.replace(config.solver_opts, seed=seed, audit=config.audit)
        t0 = time.perf_counter()
        report = solve(instance, opts)
        elapsed = time.perf_counter() - t0
    elif solver == "rs":
        opts = dataclasses.replace(config.rs_opts, seed=seed)
        t0 = time.perf_counter()
        report = rs_solve(instance, opts)
        elapsed = time.perf_counter() - t0
    else:
        raise ConfigError(f"unknown solver {solver!r}")
    row = ResultRow(
        experiment=config.experiment,
        solver=solver,
        n=instance.n,
        p=instance.p,
        seed=seed,
        status=report.status,
        iterations=report.iterations,
        wall_time_s=elapsed,
        objective=0.5 * csum((report.x_final - instance.y) ** 2),
        alpha_bar=report.alpha_final / instance.n,
        beta=report.beta_final,
        trigger_count=report.trigger_count,
    )
    return row, report


def _prepare_outdir(config: ExperimentConfig) -> Path:
    outdir = Path(config.output_dir) / config.experiment
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def run_path2d(config: ExperimentConfig) -> bool:
    """Trace the 2-d showcase run and dump every iterate with its ball."""
    if len(config.y0) != 2:
        raise ConfigError("path2d expects a 2-d y0")
    outdir = _prepare_outdir(config)
    _echo_config(outdir, config)
    p, gamma = config.p_list[0], config.gamma
    instance = ProblemInstance(y=np.asarray(config.y0), p=p, gamma=gamma)
    opts = dataclasses.replace(config.solver_opts, audit=config.audit)

    states = []
    t0 = time.perf_counter()
    report = solve(instance, opts, eps0=np.asarray(config.eps0), collect=states.append)
    elapsed = time.perf_counter() - t0

    trace_rows = []
    for s in states:
        trace_rows.append([
            s.k, s.x[0], s.x[1], s.eps[0], s.eps[1], s.w[0], s.w[1],
            s.gamma_k, s.lam, s.alpha_res, s.alpha_res / instance.n, s.beta_res,
            s.triggered, p, gamma,
        ])
    _write_csv(outdir / "trace.csv", TRACE_COLUMNS, trace_rows)

    row = ResultRow(
        experiment=config.experiment, solver="irbp", n=instance.n, p=p,
        seed=config.solver_opts.seed, status=report.status, iterations=report.iterations,
        wall_time_s=elapsed, objective=0.5 * csum((report.x_final - instance.y) ** 2),
        alpha_bar=report.alpha_bar_final, beta=report.beta_final,
        trigger_count=report.trigger_count,
    )
    _write_csv(outdir / "results.csv", RESULT_COLUMNS, [row.as_list()])
    _write_json(outdir / "summary.json", {
        "experiment": "path2d",
        "status": report.status,
        "iterations": report.iterations,
        "x_final": list(report.x_final),
        "lambda_final": report.lambda_final,
    })
    return report.status in _OK_STATUSES


def profile_table(rows: list) -> dict:
    """Cumulative success fraction vs wall-clock per (solver, p)."""
    table = {}
    groups = {}
    for row in rows:
        groups.setdefault((row.solver, row.p), []).append(row)
    for (solver, p), group in sorted(groups.items()):
        times = sorted(r.wall_time_s for r in group if r.succeeded)
        total = len(group)
        curve = [[t, (i + 1) / total] for i, t in enumerate(times)]
        table[f"{solver}|p={p}"] = curve
    return table


def run_profile(config: ExperimentConfig) -> bool:
    """Both solvers on num_instances random problems per p; success profiles."""
    outdir = _prepare_outdir(config)
    _echo_config(outdir, config)
    n = int(config.n_list[0])
    rows = []
    for p in config.p_list:
        for i in range(config.num_instances):
            seed = int(config.seeds[i % len(config.seeds)])
            instance = gen_instance(n, p, config.gamma, seed)
            for solver in ("irbp", "rs"):
                row, _ = _run_one(solver, instance, config, seed)
                rows.append(row)
    _write_csv(outdir / "results.csv", RESULT_COLUMNS, [r.as_list() for r in rows])

    rates = {}
    for p in config.p_list:
        for solver in ("irbp", "rs"):
            group = [r for r in rows if r.solver == solver and r.p == p]
            ok = sum(1 for r in group if r.succeeded)
            rates[f"{solver}|p={p}"] = {"succeeded": ok, "total": len(group)}
    _write_json(outdir / "summary.json", {
        "experiment": "profile",
        "success_rates": rates,
        "profile": profile_table(rows),
    })
    return all(r.succeeded for r in rows)


def run_scaling(config: ExperimentConfig) -> bool:
    """Reweighted solver only, across the n grid; per-cell time quartiles."""
    outdir = _prepare_outdir(config)
    _echo_config(outdir, config)
    rows = []
    for n in config.n_list:
        for p in config.p_list:
            for i in range(config.num_instances):
                seed = int(config.seeds[i % len(config.seeds)])
                instance = gen_instance(int(n), p, config.gamma, seed)
                row, _ = _run_one("irbp", instance, config, seed)
                rows.append(row)
    _write_csv(outdir / "results.csv", RESULT_COLUMNS, [r.as_list() for r in rows])

    summary = []
    for n in config.n_list:
        for p in config.p_list:
            times = [r.wall_time_s for r in rows if r.n == int(n) and r.p == p]
            q1, med, q3 = (float(q) for q in np.percentile(times, [25, 50, 75]))
            summary.append({"n": int(n), "p": p, "time_q1": q1, "time_median": med, "time_q3": q3})
    _write_json(outdir / "summary.json", {"experiment": "scaling", "cells": summary})
    return all(r.succeeded for r in rows)


def run_sensitivity(config: ExperimentConfig) -> bool:
    """(big_m, tau) grid at fixed n and p; the same instances in every cell."""
    outdir = _prepare_outdir(config)
    _echo_config(outdir, config)
    n, p = int(config.n_list[0]), config.p_list[0]
    instances = [
        gen_instance(n, p, config.gamma, int(config.seeds[i % len(config.seeds)]))
        for i in range(config.num_instances)
    ]
    rows = []
    cells = []
    for big_m in config.m_list:
        for tau in config.tau_list:
            cell_rows = []
            for i, instance in enumerate(instances):
                seed = int(config.seeds[i % len(config.seeds)])
                opts = dataclasses.replace(
                    config.solver_opts, big_m=float(big_m), tau=float(tau), seed=seed, audit=config.audit
                )
                row, _ = _run_one("irbp", instance, config, seed, solver_opts=opts)
                row.experiment = f"sensitivity:M={big_m:g},tau={tau:g}"
                cell_rows.append(row)
            rows.extend(cell_rows)
            cells.append({
                "big_m": float(big_m),
                "tau": float(tau),
                "obj_mean": float(np.mean([r.objective for r in cell_rows])),
                "alpha_bar_mean": float(np.mean([r.alpha_bar for r in cell_rows])),
                "beta_mean": float(np.mean([r.beta for r in cell_rows])),
                "time_mean": float(np.mean([r.wall_time_s for r in cell_rows])),
                "all_converged": all(r.status == CONVERGED for r in cell_rows),
            })
    _write_csv(outdir / "results.csv", RESULT_COLUMNS, [r.as_list() for r in rows])
    _write_json(outdir / "summary.json", {"experiment": "sensitivity", "cells": cells})
    return all(r.succeeded for r in rows)


RUNNERS = {
    "path2d": run_path2d,
    "profile": run_profile,
    "scaling": run_scaling,
    "sensitivity": run_sensitivity,
}


def run_experiment(config: ExperimentConfig) -> bool:
    return RUNNERS[config.experiment](config)
