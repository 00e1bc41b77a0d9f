#!/usr/bin/env python3
"""Render figures from lpball benchmark CSVs.

Pure reader of the harness's outputs: performance profiles from `profile`
results, wall-clock box plots from `scaling` results, and the 2-d iteration
path (with the weighted-l1 balls of selected iterations) from a `path2d`
trace.  No solver math is recomputed here.

Usage:
    plots.py --figure profile  --in results.csv --out profile.svg
    plots.py --figure boxplot  --in results.csv --out boxes.svg
    plots.py --figure path2d   --in trace.csv   --out path.svg
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# identical inputs must yield identical bytes: fixed hash salt, no dates
plt.rcParams["svg.hashsalt"] = "bench-plots"

OK_STATUSES = {"converged", "trivial_inside_ball"}

PROFILE_COLUMNS = {"solver", "p", "status", "wall_time_s"}
BOXPLOT_COLUMNS = {"n", "p", "status", "wall_time_s"}
PATH2D_COLUMNS = {"iter", "x1", "x2", "w1", "w2", "gamma_k", "p", "gamma"}


class PlotError(Exception):
    """Unusable input: missing file, empty data, or schema mismatch."""


@dataclass
class PlotJob:
    input_csv: str
    figure: str
    output_image: str
    style: dict = field(default_factory=dict)


def read_rows(path, required):
    p = Path(path)
    if not p.exists():
        raise PlotError(f"input file not found: {path}")
    with open(p, newline="") as fh:
        reader = csv.DictReader(fh)
        header = set(reader.fieldnames or [])
        missing = required - header
        if missing:
            raise PlotError(f"missing columns {sorted(missing)} in {path}")
        rows = list(reader)
    if not rows:
        raise PlotError(f"no data rows in {path}")
    return rows


def _save(fig, out):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    kwargs = {"metadata": {"Date": None}} if out.suffix == ".svg" else {}
    fig.savefig(out, **kwargs)
    plt.close(fig)


def build_profile_curves(rows):
    """Cumulative success fraction against wall-clock, per (solver, p).

    Returns {(solver, p): [(time, fraction), ...]} with fractions relative to
    the group's total run count, so failed runs cap the curve below 1.
    """
    groups = {}
    for r in rows:
        groups.setdefault((r["solver"], r["p"]), []).append(r)
    curves = {}
    for key, group in sorted(groups.items()):
        times = sorted(float(r["wall_time_s"]) for r in group if r["status"] in OK_STATUSES)
        total = len(group)
        curves[key] = [(t, (i + 1) / total) for i, t in enumerate(times)]
    return curves


def plot_profile(job: PlotJob) -> str:
    rows = read_rows(job.input_csv, PROFILE_COLUMNS)
    curves = build_profile_curves(rows)
    p_values = sorted({p for (_, p) in curves}, key=float)
    fig, axes = plt.subplots(1, len(p_values), figsize=(5.2 * len(p_values), 4.0), squeeze=False)
    for ax, p in zip(axes[0], p_values):
        for (solver, pp), curve in curves.items():
            if pp != p:
                continue
            if curve:
                ts = [t for t, _ in curve]
                fr = [f for _, f in curve]
                ax.step([ts[0]] + ts, [0.0] + fr, where="post", label=solver)
            else:
                ax.plot([], [], label=solver)
        ax.set_xscale("log")
        ax.set_ylim(0.0, 1.05)
        ax.set_xlabel("wall-clock time (s)")
        ax.set_ylabel("fraction of instances solved")
        ax.set_title(f"p = {p}")
        ax.legend(loc="lower right")
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    _save(fig, job.output_image)
    return job.output_image


def plot_boxes(job: PlotJob) -> str:
    rows = read_rows(job.input_csv, BOXPLOT_COLUMNS)
    groups = {}
    for r in rows:
        if r["status"] in OK_STATUSES:
            groups.setdefault((r["p"], int(r["n"])), []).append(float(r["wall_time_s"]))
    if not groups:
        raise PlotError("no successful runs to plot")
    p_values = sorted({p for (p, _) in groups}, key=float)
    fig, axes = plt.subplots(1, len(p_values), figsize=(5.2 * len(p_values), 4.0), squeeze=False)
    for ax, p in zip(axes[0], p_values):
        ns = sorted(n for (pp, n) in groups if pp == p)
        data = [groups[(p, n)] for n in ns]
        ax.boxplot(data, tick_labels=[f"{n:g}" for n in ns])
        ax.set_yscale("log")
        ax.set_xlabel("problem size n")
        ax.set_ylabel("wall-clock time (s)")
        ax.set_title(f"p = {p}")
        ax.grid(True, which="both", axis="y", alpha=0.3)
    fig.tight_layout()
    _save(fig, job.output_image)
    return job.output_image


def _lp_ball_boundary(p, gamma, samples=400):
    """First-quadrant boundary of sum |x|^p = gamma, reflected to all quadrants."""
    xmax = gamma ** (1.0 / p)
    xs, ys = [], []
    for i in range(samples + 1):
        x = xmax * i / samples
        rest = max(gamma - x**p, 0.0)
        xs.append(x)
        ys.append(rest ** (1.0 / p))
    quad = list(zip(xs, ys))
    full = quad + [(-x, y) for x, y in reversed(quad)]
    full += [(-x, -y) for x, y in quad] + [(x, -y) for x, y in reversed(quad)]
    return [x for x, _ in full], [y for _, y in full]


def plot_path2d(job: PlotJob) -> str:
    rows = read_rows(job.input_csv, PATH2D_COLUMNS)
    p = float(rows[0]["p"])
    gamma = float(rows[0]["gamma"])
    xs = [float(r["x1"]) for r in rows]
    ys = [float(r["x2"]) for r in rows]

    fig, ax = plt.subplots(figsize=(5.6, 5.6))
    bx, by = _lp_ball_boundary(p, gamma)
    ax.plot(bx, by, color="black", lw=1.2, label=f"lp ball (p={p:g})")

    # dashed weighted-l1 balls for a handful of iterations
    n_balls = int(job.style.get("n_balls", 6))
    picks = sorted({0, len(rows) - 1} | set(range(0, len(rows), max(1, len(rows) // n_balls))))
    for i in picks:
        w1, w2, gk = float(rows[i]["w1"]), float(rows[i]["w2"]), float(rows[i]["gamma_k"])
        if w1 <= 0 or w2 <= 0 or gk <= 0:
            continue
        a, b = gk / w1, gk / w2
        ax.plot([a, 0, -a, 0, a], [0, b, 0, -b, 0], ls="--", lw=0.8, alpha=0.7)

    ax.plot(xs, ys, marker="o", ms=4, lw=1.0, color="tab:red", label="iterates")
    ax.plot(xs[-1], ys[-1], marker="*", ms=12, color="tab:red")
    lim = 1.1 * gamma ** (1.0 / p)
    ax.set_xlim(-0.25 * lim, lim)
    ax.set_ylim(-0.25 * lim, lim)
    ax.axhline(0, color="gray", lw=0.5)
    ax.axvline(0, color="gray", lw=0.5)
    ax.set_aspect("equal")
    ax.legend(loc="upper right")
    fig.tight_layout()
    _save(fig, job.output_image)
    return job.output_image


RENDERERS = {"profile": plot_profile, "boxplot": plot_boxes, "path2d": plot_path2d}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plots.py", description=__doc__)
    parser.add_argument("--figure", choices=sorted(RENDERERS), required=True)
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output_image", required=True)
    args = parser.parse_args(argv)
    job = PlotJob(input_csv=args.input_csv, figure=args.figure, output_image=args.output_image)
    try:
        RENDERERS[args.figure](job)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
