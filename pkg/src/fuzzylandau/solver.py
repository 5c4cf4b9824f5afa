"""Time integration of the regularised fuzzy Landau system and its homogeneous
reduction.

One step is an operator splitting of free transport on the torus with a
forward-Euler update of ``Q(f) + (1/n) Laplacian_v f``.  The collision update
conserves mass, momentum and energy to round-off and satisfies
``H(f + dt Q) - H(f) = -dt D(f) + O(dt^2)``; the ledger in
:class:`Trajectory` tracks that defect step by step.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .collision import CollisionOperator, PositivityError
from .functionals import entropy, fisher, lp_norm, moment
from .grid import Field, Grid, GridSpec, VField, marginal_over_x
from .kernels import SpatialFamily, SpatialKernelSpec, VelocityKernelSpec

log = logging.getLogger(__name__)

SPLITTINGS = ("strang", "lie")


class NumericalError(RuntimeError):
    """Negativity or non-finite values that adaptive stepping could not cure."""


class CFLError(ValueError):
    pass


@dataclass
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 0.2
    splitting: str = "strang"
    viscosity_inv_n: float = 0.0
    record_every: int = 10
    adaptive: bool = True
    max_halvings: int = 10
    deterministic: bool = True
    transport: bool = True
    moments: Sequence[float] = (2.0, 4.0)
    norms: Sequence[float] = (2.0,)
    entropy_tol: float = 1e-12
    snapshot_every: int = 0

    def __post_init__(self) -> None:
        self.splitting = self.splitting.lower()
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.viscosity_inv_n < 0:
            raise ValueError("viscosity_inv_n must be nonnegative")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"splitting must be one of {SPLITTINGS}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    momentum: np.ndarray
    energy: float
    x2moment: float
    H: float
    D: float
    fisher: float
    moments: Dict[float, float]
    lp: Dict[float, float]
    fmin: float
    fmax: float

    def row(self) -> Dict[str, float]:
        out = {"t": self.t, "mass": self.mass}
        for k, name in enumerate("xyz"[: len(self.momentum)]):
            out[f"p{name}"] = float(self.momentum[k])
        out.update(
            energy=self.energy, x2moment=self.x2moment, H=self.H, D=self.D, fisher=self.fisher
        )
        for s, val in self.moments.items():
            out[f"M{s:g}"] = val
        for p, val in self.lp.items():
            out[f"L{p:g}"] = val
        out.update(fmin=self.fmin, fmax=self.fmax)
        return out


@dataclass
class Trajectory:
    records: List[DiagnosticsRecord] = field(default_factory=list)
    # per collision substep: (t, dt, H_before, H_after, D)
    entropy_ledger: List[tuple] = field(default_factory=list)
    snapshots: List[Path] = field(default_factory=list)
    final: Optional[Field] = None

    def series(self, name: str) -> np.ndarray:
        return np.array([r.row()[name] for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def entropy_defects(self) -> np.ndarray:
        """|Delta H + D dt| per collision substep."""
        L = np.array(self.entropy_ledger).reshape(-1, 5)
        return np.abs(L[:, 3] - L[:, 2] + L[:, 4] * L[:, 1])

    def entropy_drops(self) -> np.ndarray:
        L = np.array(self.entropy_ledger).reshape(-1, 5)
        return np.abs(L[:, 3] - L[:, 2])

    def cumulative_entropy_defect(self) -> float:
        """H(end) - H(start) + sum D dt over the collision substeps."""
        L = np.array(self.entropy_ledger).reshape(-1, 5)
        return float(np.sum(L[:, 3] - L[:, 2] + L[:, 4] * L[:, 1]))


# -- floors -----------------------------------------------------------------


def gaussian_floor(grid: Grid, n: float) -> np.ndarray:
    """(1/n) exp(-|v|^2/2 - |x|^2/2) on the grid (x minimal-image about the origin)."""
    return np.broadcast_to(
        np.exp(-0.5 * grid.v_squared - 0.5 * grid.x_squared) / n, grid.shape
    ).copy()


def apply_floor(f: Field, n: float) -> Field:
    return f.with_values(f.values + gaussian_floor(f.grid, n))


# -- substeps ---------------------------------------------------------------


def _shift_axis(values: np.ndarray, shifts: np.ndarray, x_axis: int, v_axis: int) -> np.ndarray:
    """Periodic tent-interpolated shift by ``shifts[j]`` cells for each velocity slice j."""
    out = np.empty_like(values)
    for j, s in enumerate(shifts):
        sl = [slice(None)] * values.ndim
        sl[v_axis] = j
        sub = values[tuple(sl)]
        ax = x_axis if x_axis < v_axis else x_axis - 1
        r = np.round(s)
        if abs(s - r) < 1e-12:
            s = r
        m = int(np.floor(s))
        theta = s - m
        moved = np.roll(sub, m, axis=ax)
        if theta > 0:
            moved = (1.0 - theta) * moved + theta * np.roll(sub, m + 1, axis=ax)
        out[tuple(sl)] = moved
    return out


def transport_step(f: Field, dt: float) -> Field:
    g = f.grid
    vals = f.values
    if g.spec.n_x == 1:
        return f.copy()
    shifts = g.v1d * dt / g.dx
    for k in range(g.d):
        vals = _shift_axis(vals, shifts, k, g.d + k)
    return f.with_values(vals, check=False)


def check_viscosity_cfl(grid: Grid, dt: float, inv_n: float) -> None:
    ratio = dt * inv_n / grid.dv**2
    if ratio > 1.0 / (2 * grid.d):
        raise CFLError(
            f"viscosity CFL violated: dt*inv_n/dv^2 = {ratio:.4g} > 1/(2d) = {1 / (2 * grid.d):.4g}"
        )


def viscosity_step(f: Field, dt: float, inv_n: float) -> Field:
    if inv_n < 0:
        raise ValueError("inv_n must be nonnegative")
    if inv_n == 0:
        return f.copy()
    check_viscosity_cfl(f.grid, dt, inv_n)
    return f.with_values(f.values + dt * inv_n * f.grid.laplacian_v(f.values), check=False)


# -- stepping ---------------------------------------------------------------


class Stepper:
    """Bundles a collision operator with a :class:`SolverConfig`."""

    def __init__(self, op: CollisionOperator, config: SolverConfig):
        self.op = op
        self.config = config
        self.grid = op.grid
        if config.viscosity_inv_n > 0:
            check_viscosity_cfl(self.grid, config.dt, config.viscosity_inv_n)
        self.ledger: List[tuple] = []
        self.t = 0.0

    def collision_substep(self, values: np.ndarray, dt: float, depth: int = 0) -> np.ndarray:
        cfg = self.config
        rhs, D = self.op.rhs_metric(Field(self.grid, values, check=False), return_dissipation=True)
        new = values + dt * rhs
        if cfg.viscosity_inv_n > 0:
            new += dt * cfg.viscosity_inv_n * self.grid.laplacian_v(values)
        ok = bool(np.all(np.isfinite(new)) and np.all(new > 0))
        H0 = H1 = None
        if ok:
            w = self.grid.cell_volume
            H0 = float(np.sum(values * np.log(values)) * w)
            H1 = float(np.sum(new * np.log(new)) * w)
            if H1 - H0 > cfg.entropy_tol * max(1.0, abs(H0)):
                ok = False
        if not ok:
            if cfg.adaptive and depth < cfg.max_halvings:
                log.debug("halving collision substep dt=%g at t=%g", dt, self.t)
                half = self.collision_substep(values, dt / 2, depth + 1)
                return self.collision_substep(half, dt / 2, depth + 1)
            raise NumericalError(
                f"collision substep lost positivity or increased entropy at t={self.t:g}"
            )
        self.ledger.append((self.t, dt, H0, H1, D))
        self.t += dt
        return new

    def step(self, f: Field) -> Field:
        cfg = self.config
        dt = cfg.dt
        transport = cfg.transport and self.grid.spec.n_x > 1
        t0 = self.t
        vals = f.values
        if transport and cfg.splitting == "strang":
            vals = transport_step(f, dt / 2).values
        elif transport:
            vals = transport_step(f, dt).values
        vals = self.collision_substep(vals, dt)
        if transport and cfg.splitting == "strang":
            vals = transport_step(Field(self.grid, vals, check=False), dt / 2).values
        self.t = t0 + dt
        return Field(self.grid, vals, check=False)


def step(f: Field, config: SolverConfig, op: CollisionOperator) -> Field:
    return Stepper(op, config).step(f)


def diagnostics(
    f: Field, t: float, op: CollisionOperator, config: SolverConfig
) -> DiagnosticsRecord:
    g = f.grid
    w = g.cell_volume
    v = f.values
    return DiagnosticsRecord(
        t=float(t),
        mass=float(v.sum() * w),
        momentum=np.array([float(np.sum(v * g.v_component(k)) * w) for k in range(g.d)]),
        energy=float(np.sum(v * g.v_squared) * w),
        x2moment=float(np.sum(v * g.x_squared) * w),
        H=entropy(f),
        D=op.dissipation_pairs(f),
        fisher=fisher(f, op.vspec.gamma),
        moments={float(s): moment(f, s) for s in config.moments},
        lp={float(p): lp_norm(f, p) for p in config.norms},
        fmin=float(v.min()),
        fmax=float(v.max()),
    )


def run(
    f0: Field,
    config: SolverConfig,
    op: CollisionOperator,
    snapshot_dir: Optional[Path] = None,
    callback: Optional[Callable[[int, Field], None]] = None,
) -> Trajectory:
    stepper = Stepper(op, config)
    traj = Trajectory()
    f = f0
    n = config.n_steps
    traj.records.append(diagnostics(f, 0.0, op, config))
    if snapshot_dir is not None and config.snapshot_every:
        traj.snapshots.append(write_snapshot(f, 0.0, op, Path(snapshot_dir) / "snap_00000.bin"))
    for i in range(1, n + 1):
        f = stepper.step(f)
        if callback is not None:
            callback(i, f)
        if i % config.record_every == 0 or i == n:
            traj.records.append(diagnostics(f, stepper.t, op, config))
        if snapshot_dir is not None and config.snapshot_every and i % config.snapshot_every == 0:
            path = Path(snapshot_dir) / f"snap_{i:05d}.bin"
            traj.snapshots.append(write_snapshot(f, stepper.t, op, path))
    traj.entropy_ledger = stepper.ledger
    traj.final = f
    return traj


def homogeneous_run(F0: VField, config: SolverConfig, op: CollisionOperator) -> Trajectory:
    """Run on the velocity-only grid; ``op`` must live on ``F0.grid.velocity_grid()``."""
    hom = F0.as_field()
    if op.grid.spec != hom.grid.spec:
        raise ValueError("operator grid must be the single-cell velocity grid")
    return run(hom, config, op)


def homogeneous_operator(op: CollisionOperator) -> CollisionOperator:
    """The same kernels on the single-cell grid (kappa collapses to its uniform value)."""
    if op.sspec.family is not SpatialFamily.UNIFORM:
        raise ValueError("homogeneous reduction requires a uniform spatial kernel")
    return CollisionOperator(
        op.grid.velocity_grid(), op.vspec, op.sspec, backend=op.backend, gradient=op.gradient
    )


def reduction_gaps(f0: Field, config: SolverConfig, op: CollisionOperator) -> np.ndarray:
    """Max |marginal(fuzzy) - homogeneous| after each collision substep.

    The fuzzy run uses the configured splitting (transport preserves the
    x-marginal).  Both runs take the same fixed steps: adaptive halving and
    the entropy monitor are off, positivity is still enforced.
    """
    cfg = SolverConfig(**{**asdict(config), "adaptive": False, "entropy_tol": np.inf})
    hop = homogeneous_operator(op)
    fuzzy = Stepper(op, cfg)
    hom = Stepper(hop, cfg)
    f = f0
    F = marginal_over_x(f0).as_field()
    gaps = []
    for _ in range(cfg.n_steps):
        f = fuzzy.step(f)
        F = hom.step(F)
        m = marginal_over_x(f).values
        gaps.append(float(np.max(np.abs(m - F.values.reshape(m.shape)))))
    return np.array(gaps)


# -- snapshots --------------------------------------------------------------


def write_snapshot(f: Field, t: float, op: CollisionOperator, path: Path) -> Path:
    """JSON header line, then float64 little-endian values in C order (x axes, then v)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format": "fuzzylandau-snapshot-1",
        "grid": f.grid.spec.to_dict(),
        "t": t,
        "velocity_kernel": op.vspec.to_dict(),
        "spatial_kernel": op.sspec.to_dict(),
        "dtype": "<f8",
        "order": "C",
        "shape": list(f.grid.shape),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return path


def read_snapshot(path: Path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        data = np.frombuffer(fh.read(), dtype=header["dtype"])
    grid = Grid(GridSpec(**header["grid"]))
    return Field(grid, data.reshape(header["shape"]).astype(float)), header
