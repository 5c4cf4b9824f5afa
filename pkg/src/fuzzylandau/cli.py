"""Command-line driver: ``simulate``, ``check``, ``reduce`` and ``report``.

Exit codes: 0 success, 1 an enabled assertion failed, 2 configuration error,
3 numerical failure (non-finite values or lost positivity).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import analysis
from .collision import BACKENDS, GRADIENTS, CollisionOperator, PositivityError
from .grid import Field, Grid, GridError, GridSpec, maxwellian
from .kernels import KernelError, SpatialKernelSpec, VelocityKernelSpec
from .solver import (
    CFLError,
    NumericalError,
    SolverConfig,
    Trajectory,
    apply_floor,
    read_snapshot,
    reduction_gaps,
    run,
)

log = logging.getLogger("fuzzylandau")

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

MASS_TOL = 1e-12
MOMENTUM_TOL = 1e-10
ENERGY_TOL = 1e-9
REDUCTION_TOL = 1e-12


class ConfigError(ValueError):
    pass


@dataclass
class InitialCondition:
    kind: str = "maxwellian"  # maxwellian | gaussian-mixture | snapshot
    density: float = 1.0
    mean: Optional[List[float]] = None
    temperature: float = 1.0
    max_components: int = 5
    path: Optional[str] = None


@dataclass
class RunConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    velocity_kernel: VelocityKernelSpec = field(default_factory=VelocityKernelSpec)
    spatial_kernel: SpatialKernelSpec = field(default_factory=SpatialKernelSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    initial: InitialCondition = field(default_factory=InitialCondition)
    backend: str = "direct"
    gradient: str = "log"
    floor_n: Optional[float] = None
    out: str = "out"
    seed: int = 0


_SECTION_KEYS = {
    "grid": {"d", "n_x", "n_v", "v_max"},
    "velocity_kernel": {"family", "gamma", "clamp_n", "bounded_scale"},
    "spatial_kernel": {"family", "value", "k2"},
    "solver": {f.name for f in fields(SolverConfig)},
    "initial": {f.name for f in fields(InitialCondition)},
}
_TOP_KEYS = set(_SECTION_KEYS) | {"backend", "gradient", "floor_n", "out", "seed"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where or 'config'}: expected an object")
    for key in obj:
        if key not in allowed:
            path = f"{where}.{key}" if where else key
            raise ConfigError(f"unknown key {path!r}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration (unknown keys are rejected)."""
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    _check_keys(raw, _TOP_KEYS, "")
    for sec, allowed in _SECTION_KEYS.items():
        _check_keys(raw.get(sec, {}), allowed, sec)
    try:
        grid = GridSpec(**raw.get("grid", {}))
        vk = dict(raw.get("velocity_kernel", {}))
        if "bounded_scale" in vk:
            vk["scale"] = vk.pop("bounded_scale")
        vspec = VelocityKernelSpec(**vk)
        vspec.validate(grid.d)
        if vspec.singular_at_zero:
            raise ConfigError(
                f"velocity_kernel.clamp_n is required for PowerLaw gamma={vspec.gamma:g} (2+gamma <= 0)"
            )
        sspec = SpatialKernelSpec(**raw.get("spatial_kernel", {}))
        sol = dict(raw.get("solver", {}))
        for key in ("moments", "norms"):
            if key in sol:
                sol[key] = tuple(float(x) for x in sol[key])
        solver = SolverConfig(**sol)
        ic = InitialCondition(**raw.get("initial", {}))
    except (GridError, KernelError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if ic.kind not in ("maxwellian", "gaussian-mixture", "snapshot"):
        raise ConfigError(f"initial.kind must be maxwellian, gaussian-mixture or snapshot, got {ic.kind!r}")
    if ic.kind == "snapshot" and not ic.path:
        raise ConfigError("initial.path is required for a snapshot initial condition")
    if ic.mean is not None and len(ic.mean) != grid.d:
        raise ConfigError(f"initial.mean must have {grid.d} components")
    backend = raw.get("backend", "direct")
    gradient = raw.get("gradient", "log")
    if backend not in BACKENDS:
        raise ConfigError(f"backend must be one of {BACKENDS}")
    if gradient not in GRADIENTS:
        raise ConfigError(f"gradient must be one of {GRADIENTS}")
    floor_n = raw.get("floor_n")
    if floor_n is not None and not floor_n > 0:
        raise ConfigError("floor_n must be positive")
    return RunConfig(
        grid=grid,
        velocity_kernel=vspec,
        spatial_kernel=sspec,
        solver=solver,
        initial=ic,
        backend=backend,
        gradient=gradient,
        floor_n=floor_n,
        out=raw.get("out", "out"),
        seed=int(raw.get("seed", 0)),
    )


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return parse_config("{}")
    return parse_config(Path(path).read_text())


# -- helpers ------------------------------------------------------------------


def build_operator(cfg: RunConfig, grid: Optional[Grid] = None) -> CollisionOperator:
    return CollisionOperator(
        grid or Grid(cfg.grid),
        cfg.velocity_kernel,
        cfg.spatial_kernel,
        backend=cfg.backend,
        gradient=cfg.gradient,
    )


def initial_field(cfg: RunConfig, grid: Grid) -> Field:
    ic = cfg.initial
    if ic.kind == "maxwellian":
        f = maxwellian(grid, ic.density, ic.mean, ic.temperature)
    elif ic.kind == "gaussian-mixture":
        f = analysis.gaussian_mixture(grid, seed=cfg.seed, max_components=ic.max_components)
    else:
        f, header = read_snapshot(Path(ic.path))
        if f.grid.spec != grid.spec:
            raise ConfigError("snapshot grid does not match the configured grid")
        f = Field(grid, f.values)
    if cfg.floor_n is not None:
        f = apply_floor(f, cfg.floor_n)
    return f


def write_csv(traj: Trajectory, path: Path) -> None:
    rows = [r.row() for r in traj.records]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for row in rows:
            w.writerow([repr(float(v)) for v in row.values()])


def read_csv(path: Path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty time series")
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def summarize(traj: Trajectory, cfg: RunConfig) -> dict:
    first, last = traj.records[0], traj.records[-1]
    scale = np.sqrt(first.mass * max(first.energy, 1e-300))
    drift = 2 * cfg.grid.d * cfg.solver.viscosity_inv_n * first.mass * last.t
    defects = {
        "mass_rel": abs(last.mass - first.mass) / first.mass,
        "momentum_rel": float(np.max(np.abs(last.momentum - first.momentum))) / scale,
        "energy_rel": abs(last.energy - first.energy - drift) / first.energy,
    }
    ledger = np.array(traj.entropy_ledger).reshape(-1, 5)
    dH = ledger[:, 3] - ledger[:, 2]
    H_tol = 1e-12 * max(1.0, abs(first.H))
    bal = np.abs(dH + ledger[:, 4] * ledger[:, 1])
    flags = {
        "mass": defects["mass_rel"] <= MASS_TOL,
        "momentum": defects["momentum_rel"] <= MOMENTUM_TOL,
        "energy": defects["energy_rel"] <= ENERGY_TOL,
        "dissipation_nonnegative": all(r.D >= -1e-14 for r in traj.records),
        "entropy_finite": all(np.isfinite(r.H) for r in traj.records),
        "entropy_nonincreasing": bool(np.all(dH <= H_tol)) if dH.size else True,
    }
    return {
        "steps": cfg.solver.n_steps,
        "records": len(traj.records),
        "t_end": last.t,
        "defects": defects,
        "entropy_balance": {
            "cumulative": traj.cumulative_entropy_defect() if dH.size else 0.0,
            "max_step_defect": float(bal.max()) if dH.size else 0.0,
            "max_step_ratio": float(np.max(bal / np.maximum(np.abs(dH), H_tol))) if dH.size else 0.0,
        },
        "flags": flags,
        "failures": sorted(k for k, v in flags.items() if not v),
    }


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(analysis._jsonable(obj), sort_keys=True, indent=2) + "\n")


# -- subcommands --------------------------------------------------------------


def cmd_simulate(args, cfg: RunConfig) -> int:
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.snapshot_every is not None:
        cfg.solver.snapshot_every = args.snapshot_every
    grid = Grid(cfg.grid)
    op = build_operator(cfg, grid)
    f0 = initial_field(cfg, grid)
    snaps = out / "snapshots" if cfg.solver.snapshot_every else None
    traj = run(f0, cfg.solver, op, snapshot_dir=snaps)
    write_csv(traj, out / "timeseries.csv")
    summary = summarize(traj, cfg)
    _dump(summary, out / "summary.json")
    print(json.dumps({"failures": summary["failures"]}))
    return EXIT_OK if not summary["failures"] else EXIT_ASSERT


def cmd_check(args, cfg: RunConfig) -> int:
    names = [s.strip() for s in (args.suites or ",".join(analysis.REGISTRY)).split(",") if s.strip()]
    unknown = [n for n in names if n not in analysis.REGISTRY]
    if unknown:
        raise ConfigError(f"unknown suites: {unknown}")
    scfg = analysis.SuiteConfig(samples=args.samples, seed=cfg.seed, d=cfg.grid.d)
    reports = [analysis.run_inequality_suite(n, scfg) for n in names]
    payload = {
        "reports": [r.to_dict() for r in reports],
        "peetre_counterexample": analysis.peetre_counterexample(),
        "failures": [r.name for r in reports if not r.passed],
    }
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump(payload, out / "checks.json")
    print(json.dumps({"failures": payload["failures"]}))
    return EXIT_OK if not payload["failures"] else EXIT_ASSERT


def cmd_reduce(args, cfg: RunConfig) -> int:
    cfg.spatial_kernel = SpatialKernelSpec("Uniform", 1.0)
    if cfg.initial.kind == "maxwellian" and args.config is None:
        cfg.initial.kind = "gaussian-mixture"
    grid = Grid(cfg.grid)
    op = build_operator(cfg, grid)
    gaps = reduction_gaps(initial_field(cfg, grid), cfg.solver, op)
    worst = float(gaps.max()) if gaps.size else 0.0
    payload = {
        "steps": int(gaps.size),
        "gradient": cfg.gradient,
        "max_gap": worst,
        "tolerance": REDUCTION_TOL,
        "gaps": gaps,
        "failures": [] if worst <= REDUCTION_TOL else ["reduction_gap"],
    }
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump(payload, out / "reduce.json")
    print(json.dumps({"max_gap": worst, "failures": payload["failures"]}))
    return EXIT_OK if not payload["failures"] else EXIT_ASSERT


def cmd_report(args, cfg: RunConfig) -> int:
    data = read_csv(Path(args.csv))
    if args.functional not in data:
        raise ConfigError(f"column {args.functional!r} not in {sorted(data)}")
    fit = analysis.rate_fit(
        data["t"], data[args.functional], args.functional, args.law, args.exponent, args.margin
    )
    payload = fit.to_dict()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump(payload, out / "rate_fit.json")
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK if fit.passed else EXIT_ASSERT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fuzzylandau", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--deterministic", action="store_true", help="fixed reduction order")

    sp = sub.add_parser("simulate", help="run the solver and write CSV + JSON summary")
    common(sp)
    sp.add_argument("--snapshot-every", type=int, default=None, metavar="K")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check", help="run inequality suites")
    common(sp)
    sp.add_argument("--suites", help="comma-separated suite names (default: all)")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("reduce", help="kappa = 1 fuzzy run against the homogeneous run")
    common(sp)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("report", help="fit a growth law to a CSV column")
    common(sp)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--functional", default="M4")
    sp.add_argument("--law", choices=("power", "linear", "drift"), default="power")
    sp.add_argument("--exponent", type=float, default=0.0)
    sp.add_argument("--margin", type=float, default=0.2)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.deterministic:
            cfg.solver.deterministic = True
        return args.func(args, cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, PositivityError, FloatingPointError) as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC
    except CFLError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
