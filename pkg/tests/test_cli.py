import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ekdiff import DiffusionParams, ggbm_green
from ekdiff.cli import fmt, main


def read_csv(path):
    lines = path.read_text(encoding="ascii").split("\n")
    assert lines[-1] == ""
    header = lines[0].split(",")
    rows = [l for l in lines[1:-1] if not l.startswith("#")]
    comments = [l for l in lines[1:-1] if l.startswith("#")]
    data = np.array([[float(c) for c in r.split(",")] for r in rows])
    return header, data, comments


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(v):
    s = fmt(v)
    assert float(s) == v
    assert "," not in s


def test_mwright_gaussian_rows(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["mwright", "--nu", "0.5", "--range", "0:4", "--n", "5", "--out", str(out)]) == 0
    header, data, _ = read_csv(out)
    assert header == ["z", "M_nu"]
    assert data.shape == (5, 2)
    assert np.allclose(data[:, 1], np.exp(-data[:, 0] ** 2 / 4) / math.sqrt(math.pi), rtol=1e-12)
    manifest = json.loads((tmp_path / "m.csv.manifest.json").read_text())
    assert manifest["outputs"] == [str(out)]


def test_mwright_single_row_at_origin(capsys):
    assert main(["mwright", "--nu", "0.25", "--range", "0:0", "--n", "1"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "z,M_nu"
    assert len(lines) == 2
    assert float(lines[1].split(",")[1]) == pytest.approx(1 / math.gamma(0.75), rel=1e-15)


def test_mwright_dirac_order_is_usage_error(capsys):
    assert main(["mwright", "--nu", "1"]) == 2
    assert "Dirac" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [["mwright", "--nu", "0.5", "--range", "4:0"], ["mwright", "--nu", "0.5", "--range", "bad"], ["frobnicate"],
     ["green", "--alpha", "1"], ["solve", "--alpha", "1", "--beta", "1.5", "--out", "x"],
     ["green", "--alpha", "2.5", "--beta", "0.5"], ["ek", "--mu", "2", "--op", "derivative"]],
)
def test_usage_errors_exit_two(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_numerical_failure_exits_three(tmp_path, capsys):
    # t0 far below what the grid resolves
    argv = ["solve", "--alpha", "1.4", "--beta", "1", "--t0", "1e-6", "--nt", "3", "--out", str(tmp_path)]
    assert main(argv) == 3
    assert "ResolutionError" in capsys.readouterr().err


def test_ek_power_law_with_oracle(tmp_path):
    out = tmp_path / "ek.csv"
    assert main(["ek", "--gamma", "0.2", "--mu", "0.7", "--eta", "1.5", "--c", "2",
                 "--range", "0.5:2", "--n", "4", "--out", str(out)]) == 0
    header, data, _ = read_csv(out)
    assert header == ["t", "value", "power_law_oracle"]
    assert np.allclose(data[:, 1], data[:, 2], rtol=1e-8)


def test_ek_derivative_row(capsys):
    assert main(["ek", "--op", "derivative", "--gamma", "-0.4", "--mu", "0.4", "--c", "2",
                 "--range", "1:1", "--n", "1"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == "t,value"
    assert float(lines[1].split(",")[1]) == pytest.approx(2 / math.gamma(2.6), rel=1e-5)


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (0.6, 0.6), (0.8, 0.4)])
def test_green_profile_and_mass(tmp_path, alpha, beta):
    out = tmp_path / "g.csv"
    svg = tmp_path / "g.svg"
    assert main(["green", "--alpha", str(alpha), "--beta", str(beta), "--out", str(out), "--svg", str(svg)]) == 0
    header, data, comments = read_csv(out)
    assert header == ["x", "G"]
    assert 0.999 <= np.trapezoid(data[:, 1], data[:, 0]) <= 1.001
    assert np.allclose(data[:, 1], ggbm_green(DiffusionParams(alpha, beta), data[:, 0], 1.0), rtol=0, atol=0)
    var = float(comments[0].split("=")[1])
    assert var == pytest.approx(2 / math.gamma(beta + 1), rel=1e-15)
    assert svg.read_text().startswith("<svg")


def test_solve_brownian_matches_green_output(tmp_path):
    sol = tmp_path / "sol"
    assert main(["solve", "--alpha", "1", "--beta", "1", "--x-max", "10", "--nx", "401", "--every", "50",
                 "--out", str(sol), "--svg", "--quiet"]) == 0
    g = tmp_path / "g.csv"
    assert main(["green", "--alpha", "1", "--beta", "1", "--x-max", "10", "--nx", "401", "--out", str(g)]) == 0
    _, final, comments = read_csv(sol / "level_0199.csv")
    _, green, _ = read_csv(g)
    assert comments == ["# t=1.0"]
    assert np.array_equal(final[:, 0], green[:, 0])
    dx = final[1, 0] - final[0, 0]
    assert dx * np.sum(np.abs(final[:, 1] - green[:, 1])) < 1e-3
    header, diag, _ = read_csv(sol / "diagnostics.csv")
    assert header == ["t", "mass", "variance"]
    assert diag.shape == (200, 3)
    assert np.max(np.abs(diag[:, 1] - 1)) < 1e-4
    manifest = json.loads((sol / "manifest.json").read_text())
    assert manifest["command"] == "solve"
    listed = sorted(manifest["outputs"])
    written = sorted(str(p) for p in sol.iterdir() if p.name != "manifest.json")
    assert listed == written
    # manifest is the last file written
    mtimes = {p.name: p.stat().st_mtime_ns for p in sol.iterdir()}
    assert mtimes["manifest.json"] == max(mtimes.values())


def test_solve_minimal_two_levels(tmp_path):
    assert main(["solve", "--alpha", "0.8", "--beta", "0.5", "--nt", "2", "--out", str(tmp_path), "--quiet"]) == 0
    assert sorted(p.name for p in tmp_path.glob("level_*.csv")) == ["level_0000.csv", "level_0001.csv"]


def simulate(out, *extra):
    return main(["simulate", "--alpha", "1", "--beta", "1", "--paths", "1000", "--seed", "7",
                 "--out", str(out), "--quiet", *extra])


def test_simulate_is_byte_reproducible(tmp_path):
    assert simulate(tmp_path / "a") == 0
    assert simulate(tmp_path / "b") == 0
    for name in ("paths.csv", "stats.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_unit_beta_tau_column(tmp_path):
    assert simulate(tmp_path) == 0
    header, data, comments = read_csv(tmp_path / "paths.csv")
    assert header[:3] == ["path", "tau", "x0"]
    assert data.shape == (1000, 2 + 33)
    assert np.all(data[:, 1] == 1.0)
    assert np.array_equal(data[:, 0], np.arange(1000))
    assert np.all(data[:, 2] == 0.0)
    assert comments[0].startswith("# columns x<k> hold the path at t = 0.0 ")


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_simulate_stats_slope(tmp_path, alpha):
    assert main(["simulate", "--alpha", str(alpha), "--beta", "0.7", "--paths", "20000", "--seed", "3",
                 "--out", str(tmp_path), "--svg", "--quiet"]) == 0
    header, data, _ = read_csv(tmp_path / "stats.csv")
    assert header == ["t", "variance", "variance_over_t_alpha", "slope"]
    assert abs(data[0, 3] - alpha) < 0.05
    assert np.isnan(data[0, 2])
    assert (tmp_path / "variance.svg").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert len(manifest["outputs"]) == 3


def test_simulate_few_paths_skips_stats(tmp_path):
    assert main(["simulate", "--alpha", "1", "--beta", "0.5", "--paths", "10", "--out", str(tmp_path),
                 "--quiet"]) == 0
    assert not (tmp_path / "stats.csv").exists()


def test_csv_line_endings(tmp_path):
    out = tmp_path / "m.csv"
    main(["mwright", "--nu", "0.3", "--n", "3", "--out", str(out)])
    raw = out.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_verify_quick_passes(capsys):
    assert main(["verify", "--level", "quick"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and out.count("[PASS]") == 8


def test_verify_detects_injected_fault(capsys):
    assert main(["verify", "--level", "quick", "--inject-fault", "c3_moments", "--quiet"]) == 1
    assert "FAILED: c3_moments" in capsys.readouterr().err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ekdiff", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("ekdiff ")
