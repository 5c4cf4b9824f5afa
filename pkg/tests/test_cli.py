import csv
import json

import pytest

from conftest import two_gaussian
from fuzzylandau.cli import ConfigError, main, parse_config
from fuzzylandau.collision import CollisionOperator
from fuzzylandau.grid import Grid, GridSpec
from fuzzylandau.kernels import SpatialKernelSpec, VelocityKernelSpec
from fuzzylandau.solver import write_snapshot

SMALL = {
    "grid": {"d": 2, "n_x": 2, "n_v": 8, "v_max": 4.0},
    "solver": {"dt": 0.001, "t_end": 0.005, "record_every": 1},
}


def _write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_defaults():
    cfg = parse_config("{}")
    assert cfg.grid.n_v == 24 and cfg.solver.dt == 1e-3
    assert cfg.gradient == "log" and cfg.backend == "direct"


@pytest.mark.parametrize(
    "text, msg",
    [
        ('{"velocity_kernel": {"gamma": -3}}', r"\(-2, 1\] for PowerLaw in d=2"),
        ('{"grid": {"d": 3}, "velocity_kernel": {"gamma": -2.5}}', "clamp_n"),
        ('{"solver": {"dtt": 1}}', "unknown key 'solver.dtt'"),
        ('{"gamma": 1}', "unknown key 'gamma'"),
        ('{"grid": {"n_v": 15}}', "n_v must be even"),
        ("{not json", "invalid JSON"),
        ('{"backend": "gpu"}', "backend"),
    ],
)
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_simulate_maxwellian(tmp_path):
    cfg = dict(SMALL, solver={"dt": 0.001, "t_end": 0.1, "record_every": 1})
    rc = main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert rc == 0
    rows = list(csv.DictReader(open(tmp_path / "o" / "timeseries.csv")))
    assert len(rows) == 101
    assert list(rows[0]) == [
        "t", "mass", "px", "py", "energy", "x2moment", "H", "D", "fisher",
        "M2", "M4", "L2", "fmin", "fmax",
    ]
    assert all(float(r["D"]) >= 0 for r in rows)
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["failures"] == []


def test_simulate_mixture_with_snapshots(tmp_path):
    cfg = dict(SMALL, initial={"kind": "gaussian-mixture"}, seed=3)
    out = tmp_path / "o"
    rc = main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out), "--snapshot-every", "5"])
    assert rc == 0
    assert sorted(p.name for p in (out / "snapshots").iterdir()) == ["snap_00000.bin", "snap_00005.bin"]
    # restart from the last snapshot
    cfg2 = dict(SMALL, initial={"kind": "snapshot", "path": str(out / "snapshots" / "snap_00005.bin")})
    assert main(["simulate", "--config", _write(tmp_path, cfg2, "c2.json"), "--out", str(tmp_path / "o2")]) == 0


def test_config_error_exit_code(tmp_path, capsys):
    rc = main(["simulate", "--config", _write(tmp_path, {"velocity_kernel": {"gamma": -3}})])
    assert rc == 2
    assert json.loads(capsys.readouterr().err)["error"] == "config"


def test_cfl_violation_is_config_error(tmp_path):
    cfg = dict(SMALL, solver={"dt": 1.0, "t_end": 1.0, "viscosity_inv_n": 1.0})
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure_exit_code(tmp_path):
    cfg = dict(
        SMALL,
        initial={"kind": "gaussian-mixture"},
        solver={"dt": 5.0, "t_end": 5.0, "adaptive": False},
    )
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 3


def test_check_suites(tmp_path):
    rc = main([
        "check", "--suites", "peetre_corrected,bracket_subadditivity",
        "--samples", "5000", "--out", str(tmp_path),
    ])
    assert rc == 0
    payload = json.loads((tmp_path / "checks.json").read_text())
    assert [r["violations"] for r in payload["reports"]] == [0, 0]
    assert payload["peetre_counterexample"]["lhs"] > payload["peetre_counterexample"]["rhs"]
    assert main(["check", "--suites", "bogus", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("gradient, expected", [("linear", 0), ("log", 1)])
def test_reduce(tmp_path, gradient, expected):
    grid = Grid(GridSpec(d=2, n_x=4, n_v=8, v_max=4.0))
    op = CollisionOperator(grid, VelocityKernelSpec("PowerLaw", 0.0), SpatialKernelSpec("Uniform", 1.0))
    snap = write_snapshot(two_gaussian(grid, seed=0), 0.0, op, tmp_path / "ic.bin")
    cfg = {
        "grid": {"d": 2, "n_x": 4, "n_v": 8, "v_max": 4.0},
        "solver": {"dt": 0.001, "t_end": 0.005},
        "velocity_kernel": {"family": "PowerLaw", "gamma": -1.0},
        "gradient": gradient,
        "initial": {"kind": "snapshot", "path": str(snap)},
    }
    rc = main(["reduce", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)])
    assert rc == expected
    gap = json.loads((tmp_path / "reduce.json").read_text())["max_gap"]
    assert (gap <= 1e-12) == (gradient == "linear")


def test_report_drift(tmp_path):
    p = tmp_path / "ts.csv"
    p.write_text("t,M2\n0,3\n0.5,3.5\n1,4\n")
    assert main(["report", "--csv", str(p), "--functional", "M2", "--law", "drift", "--exponent", "1", "--margin", "1e-9"]) == 0
    assert main(["report", "--csv", str(p), "--functional", "M2", "--law", "drift", "--exponent", "2", "--margin", "0.1"]) == 1
    assert main(["report", "--csv", str(p), "--functional", "nope"]) == 2
