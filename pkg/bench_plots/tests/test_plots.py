import json
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from plots import (  # noqa: E402
    PlotError,
    PlotJob,
    build_profile_curves,
    main,
    plot_boxes,
    plot_path2d,
    plot_profile,
    read_rows,
)

HERE = Path(__file__).resolve().parent
PLOTS = HERE.parent / "plots.py"
ACCEPTANCE = HERE.parent.parent / "acceptance_artifacts"


def run_bench(experiment, out, config=None):
    """Produce harness CSVs through the lpball CLI, its external interface."""
    cmd = [sys.executable, "-m", "lpball", "bench", "--experiment", experiment, "--out", str(out)]
    if config is not None:
        cfg = out / f"{experiment}_cfg.json"
        cfg.write_text(json.dumps(config))
        cmd += ["--config", str(cfg)]
    res = subprocess.run(cmd, capture_output=True, text=True)
    assert res.returncode in (0, 1), res.stderr
    return out / experiment


@pytest.fixture(scope="session")
def harness_csvs(tmp_path_factory):
    """Small-scale profile/scaling/path2d outputs; the real acceptance CSVs
    are used instead when the primary suite has left them behind."""
    out = tmp_path_factory.mktemp("bench")
    paths = {}
    if (ACCEPTANCE / "profile" / "results.csv").exists():
        paths["profile"] = ACCEPTANCE / "profile" / "results.csv"
    else:
        paths["profile"] = run_bench(
            "profile", out, {"num_instances": 5, "seeds": [1, 2, 3, 4, 5]}
        ) / "results.csv"
    if (ACCEPTANCE / "scaling" / "results.csv").exists():
        paths["scaling"] = ACCEPTANCE / "scaling" / "results.csv"
    else:
        paths["scaling"] = run_bench(
            "scaling", out,
            {"n_list": [100, 1000], "p_list": [0.4, 0.8], "num_instances": 3, "seeds": [1, 2, 3]},
        ) / "results.csv"
    if (ACCEPTANCE / "sensitivity" / "results.csv").exists():
        paths["sensitivity"] = ACCEPTANCE / "sensitivity" / "results.csv"
    else:
        paths["sensitivity"] = run_bench(
            "sensitivity", out,
            {"n_list": [200], "p_list": [0.5], "num_instances": 2, "seeds": [1, 2],
             "m_list": [10.0, 100.0], "tau_list": [1.1, 1.5]},
        ) / "results.csv"
    paths["path2d"] = run_bench("path2d", out) / "trace.csv"
    return paths


def test_three_figures_render(harness_csvs, tmp_path):
    outputs = [
        plot_profile(PlotJob(str(harness_csvs["profile"]), "profile", str(tmp_path / "profile.svg"))),
        plot_boxes(PlotJob(str(harness_csvs["scaling"]), "boxplot", str(tmp_path / "boxes.svg"))),
        plot_path2d(PlotJob(str(harness_csvs["path2d"]), "path2d", str(tmp_path / "path.svg"))),
    ]
    for out in outputs:
        f = Path(out)
        assert f.exists() and f.stat().st_size > 0
        assert f.read_text().lstrip().startswith("<?xml")


def test_sensitivity_csv_renders_as_boxplot(harness_csvs, tmp_path):
    out = plot_boxes(PlotJob(str(harness_csvs["sensitivity"]), "boxplot", str(tmp_path / "sens.svg")))
    assert Path(out).exists() and Path(out).stat().st_size > 0


def test_profile_curves_nondecreasing(harness_csvs):
    rows = read_rows(harness_csvs["profile"], {"solver", "p", "status", "wall_time_s"})
    curves = build_profile_curves(rows)
    assert curves
    for key, curve in curves.items():
        fracs = [f for _, f in curve]
        times = [t for t, _ in curve]
        assert all(b >= a for a, b in zip(fracs, fracs[1:])), key
        assert all(b >= a for a, b in zip(times, times[1:])), key
        assert all(0.0 < f <= 1.0 for f in fracs)


def test_png_output(harness_csvs, tmp_path):
    out = plot_profile(PlotJob(str(harness_csvs["profile"]), "profile", str(tmp_path / "p.png")))
    assert Path(out).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_single_solver_single_curve(tmp_path):
    csv_path = tmp_path / "one.csv"
    csv_path.write_text(
        "experiment,solver,n,p,seed,status,iterations,wall_time_s,objective,alpha_bar,beta,trigger_count\n"
        "profile,irbp,100,0.4,1,converged,20,0.01,1.0,1e-12,1e-12,19\n"
        "profile,irbp,100,0.4,2,converged,22,0.02,1.1,1e-12,1e-12,20\n"
    )
    rows = read_rows(csv_path, {"solver", "p", "status", "wall_time_s"})
    curves = build_profile_curves(rows)
    assert list(curves) == [("irbp", "0.4")]
    out = plot_profile(PlotJob(str(csv_path), "profile", str(tmp_path / "one.svg")))
    assert Path(out).exists()


def test_empty_results_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("experiment,solver,n,p,seed,status,iterations,wall_time_s,objective,alpha_bar,beta,trigger_count\n")
    with pytest.raises(PlotError):
        plot_profile(PlotJob(str(empty), "profile", str(tmp_path / "x.svg")))
    rc = main(["--figure", "profile", "--in", str(empty), "--out", str(tmp_path / "x.svg")])
    assert rc == 1


def test_missing_columns_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("iter,x1,x2\n0,0.0,0.0\n")
    with pytest.raises(PlotError) as err:
        plot_path2d(PlotJob(str(bad), "path2d", str(tmp_path / "x.svg")))
    assert "missing columns" in str(err.value)


def test_missing_file_error(tmp_path):
    rc = main(["--figure", "boxplot", "--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.svg")])
    assert rc == 1


def test_deterministic_output(harness_csvs, tmp_path):
    a = plot_profile(PlotJob(str(harness_csvs["profile"]), "profile", str(tmp_path / "a.svg")))
    b = plot_profile(PlotJob(str(harness_csvs["profile"]), "profile", str(tmp_path / "b.svg")))
    assert Path(a).read_bytes() == Path(b).read_bytes()


def test_cli_subprocess(harness_csvs, tmp_path):
    res = subprocess.run(
        [sys.executable, str(PLOTS), "--figure", "path2d",
         "--in", str(harness_csvs["path2d"]), "--out", str(tmp_path / "cli.svg")],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "cli.svg").exists()
    res = subprocess.run(
        [sys.executable, str(PLOTS), "--figure", "nope", "--in", "x", "--out", "y"],
        capture_output=True, text=True,
    )
    assert res.returncode == 2
