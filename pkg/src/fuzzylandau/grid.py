"""Phase-space grid on the torus T^d times a velocity box, plus the discrete
velocity calculus (gradient, summation-by-parts divergence, Laplacian).

Storage convention: a field on a ``d``-dimensional grid is an array of shape
``(n_x,)*d + (n_v,)*d``; the first ``d`` axes are spatial, the last ``d`` are
velocity.  Cell centres are used everywhere (midpoint quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np


class GridError(ValueError):
    """Invalid grid specification."""


@dataclass(frozen=True)
class GridSpec:
    d: int = 2
    n_x: int = 4
    n_v: int = 24
    v_max: float = 6.0

    def __post_init__(self) -> None:
        if self.d not in (2, 3):
            raise GridError(f"d must be 2 or 3, got {self.d}")
        if self.n_x < 1:
            raise GridError(f"n_x must be >= 1, got {self.n_x}")
        if self.n_v % 2:
            raise GridError("n_v must be even")
        if self.n_v < 4:
            raise GridError(f"n_v must be >= 4, got {self.n_v}")
        if not self.v_max > 0:
            raise GridError(f"v_max must be positive, got {self.v_max}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_v

    def to_dict(self) -> dict:
        return {"d": self.d, "n_x": self.n_x, "n_v": self.n_v, "v_max": self.v_max}


def first_derivative_matrix(n: int, h: float) -> np.ndarray:
    """Second-order first-derivative matrix with one-sided boundary rows.

    Interior rows are central differences; the first and last rows use the
    three-point one-sided stencil, so the operator is exact on quadratics at
    every node.
    """
    D = np.zeros((n, n))
    i = np.arange(1, n - 1)
    D[i, i - 1] = -0.5
    D[i, i + 1] = 0.5
    D[0, :3] = (-1.5, 2.0, -0.5)
    D[-1, -3:] = (0.5, -2.0, 1.5)
    return D / h


def neumann_laplacian_matrix(n: int, h: float) -> np.ndarray:
    """Three-point Laplacian in flux form with zero flux through the box faces."""
    L = np.zeros((n, n))
    i = np.arange(n - 1)
    # face i+1/2 between cells i and i+1
    L[i, i] -= 1.0
    L[i, i + 1] += 1.0
    L[i + 1, i + 1] -= 1.0
    L[i + 1, i] += 1.0
    return L / h**2


def _apply_along(M: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    out = np.tensordot(M, arr, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True, eq=False)
class Grid:
    """Coordinates and discrete operators for a :class:`GridSpec`."""

    spec: GridSpec

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def dx(self) -> float:
        return self.spec.dx

    @property
    def dv(self) -> float:
        return self.spec.dv

    @property
    def shape(self) -> tuple:
        return (self.spec.n_x,) * self.d + (self.spec.n_v,) * self.d

    @property
    def x_shape(self) -> tuple:
        return (self.spec.n_x,) * self.d

    @property
    def v_shape(self) -> tuple:
        return (self.spec.n_v,) * self.d

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d * self.dv**self.d

    @property
    def v_axes(self) -> tuple:
        return tuple(range(self.d, 2 * self.d))

    @property
    def x_axes(self) -> tuple:
        return tuple(range(self.d))

    @cached_property
    def x1d(self) -> np.ndarray:
        # centred on the origin so that x = 0 is the minimal-image reference
        n = self.spec.n_x
        return -0.5 + (np.arange(n) + 0.5) / n

    @cached_property
    def v1d(self) -> np.ndarray:
        n = self.spec.n_v
        return -self.spec.v_max + (np.arange(n) + 0.5) * self.dv

    def v_component(self, k: int) -> np.ndarray:
        """k-th velocity coordinate, broadcastable against a full field."""
        shape = [1] * (2 * self.d)
        shape[self.d + k] = self.spec.n_v
        return self.v1d.reshape(shape)

    def x_component(self, k: int) -> np.ndarray:
        shape = [1] * (2 * self.d)
        shape[k] = self.spec.n_x
        return self.x1d.reshape(shape)

    @cached_property
    def v_squared(self) -> np.ndarray:
        return sum(self.v_component(k) ** 2 for k in range(self.d))

    @cached_property
    def x_squared(self) -> np.ndarray:
        return sum(self.x_component(k) ** 2 for k in range(self.d))

    @cached_property
    def v_points(self) -> np.ndarray:
        """Velocity cell centres, shape ``v_shape + (d,)``."""
        mesh = np.meshgrid(*([self.v1d] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def D1(self) -> np.ndarray:
        return first_derivative_matrix(self.spec.n_v, self.dv)

    @cached_property
    def L1(self) -> np.ndarray:
        return neumann_laplacian_matrix(self.spec.n_v, self.dv)

    def velocity_grid(self) -> "Grid":
        """The same velocity grid with a single spatial cell (homogeneous layout)."""
        s = self.spec
        return Grid(GridSpec(d=s.d, n_x=1, n_v=s.n_v, v_max=s.v_max))

    # -- discrete velocity calculus on raw arrays ---------------------------

    def grad_v(self, values: np.ndarray) -> np.ndarray:
        """Velocity gradient; the component index is appended as the last axis."""
        return np.stack(
            [_apply_along(self.D1, values, self.d + k) for k in range(self.d)], axis=-1
        )

    def div_v(self, flux: np.ndarray) -> np.ndarray:
        """Summation-by-parts divergence: the exact negative adjoint of :meth:`grad_v`."""
        out = np.zeros(flux.shape[:-1])
        for k in range(self.d):
            out -= _apply_along(self.D1.T, flux[..., k], self.d + k)
        return out

    def laplacian_v(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros_like(values)
        for k in range(self.d):
            out += _apply_along(self.L1, values, self.d + k)
        return out


def build_grid(spec: GridSpec) -> Grid:
    return Grid(spec)


class Field:
    """Nonnegative cell-averaged distribution f(x, v) on a :class:`Grid`."""

    def __init__(self, grid: Grid, values: np.ndarray, check: bool = True):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        if check:
            if not np.all(np.isfinite(values)):
                raise ValueError("field contains non-finite values")
            if np.any(values < 0):
                raise ValueError("field contains negative values")
        self.grid = grid
        self.values = values

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), check=False)

    def with_values(self, values: np.ndarray, check: bool = True) -> "Field":
        return Field(self.grid, values, check=check)

    @property
    def mass(self) -> float:
        return integrate(self)

    def __repr__(self) -> str:
        return f"Field({self.grid.spec}, mass={self.mass:.6g})"


class VField:
    """Velocity-only distribution F(v) with measure dv^d."""

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.v_shape:
            raise ValueError(f"values shape {values.shape} != {grid.v_shape}")
        self.grid = grid
        self.values = values

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.dv**self.grid.d)

    def as_field(self) -> Field:
        """View as a field on the single-cell torus (spatially homogeneous layout)."""
        vg = self.grid.velocity_grid()
        return Field(vg, self.values.reshape(vg.shape))


def maxwellian(
    grid: Grid,
    density: float = 1.0,
    mean: Optional[np.ndarray] = None,
    temperature: float = 1.0,
) -> Field:
    if density <= 0 or temperature <= 0:
        raise ValueError("density and temperature must be positive")
    d = grid.d
    u = np.zeros(d) if mean is None else np.asarray(mean, dtype=float)
    r2 = sum((grid.v_component(k) - u[k]) ** 2 for k in range(d))
    prof = density / (2 * np.pi * temperature) ** (d / 2) * np.exp(-r2 / (2 * temperature))
    return Field(grid, np.broadcast_to(prof, grid.shape).copy())


WeightFn = Callable[[Grid], np.ndarray]


def integrate(f: Field, weight=None) -> float:
    """Midpoint rule ``w * sum(weight * f)``.

    ``weight`` may be ``None`` (mass), an array broadcastable to the grid, or
    a callable taking the grid and returning such an array.
    """
    vals = f.values
    if weight is not None:
        if callable(weight):
            weight = weight(f.grid)
        vals = vals * weight
    return float(vals.sum() * f.grid.cell_volume)


def gradient_v(f: Field) -> np.ndarray:
    return f.grid.grad_v(f.values)


def marginal_over_x(f: Field) -> VField:
    g = f.grid
    F = f.values.sum(axis=g.x_axes) * g.dx**g.d
    return VField(g, F)
