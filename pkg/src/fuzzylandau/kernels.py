"""Interaction kernels A(|z|), the projector onto z-perp, the derived
coefficients a, b, c and the spatial kernel kappa.

The coefficient ``c`` is the divergence of ``b``:

    c(z) = -(d-1) * ((d-2) * A(|z|) / |z|^2 + A'(|z|) / |z|)

which for the power law A = r^(2+gamma) reduces to -(d-1)(d+gamma)|z|^gamma.
Note the ``A'/|z|`` term: dividing by |z|^2 there is dimensionally wrong and
disagrees with finite differences of ``b`` (see ``tests/test_kernels.py``).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .grid import Grid


class KernelError(ValueError):
    pass


class VelocityFamily(str, Enum):
    POWER_LAW = "PowerLaw"
    BOUNDED_SOFT = "BoundedSoft"
    QUADRATIC_WEIGHTED = "QuadraticWeighted"


class SpatialFamily(str, Enum):
    UNIFORM = "Uniform"
    EXP_DECAY = "ExpDecay"


def bracket(r):
    """Japanese bracket <r> = sqrt(1 + r^2)."""
    return np.sqrt(1.0 + np.square(r))


def gamma_lower(d: int) -> float:
    return -float(min(d, 4))


@dataclass(frozen=True)
class VelocityKernelSpec:
    family: VelocityFamily = VelocityFamily.POWER_LAW
    gamma: float = 0.0
    clamp_n: Optional[int] = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", VelocityFamily(self.family))
        if self.gamma > 1:
            raise KernelError(f"gamma must be <= 1, got {self.gamma}")
        if self.clamp_n is not None and int(self.clamp_n) < 1:
            raise KernelError("clamp_n must be a positive integer")
        if self.scale <= 0:
            raise KernelError("bounded_scale must be positive")

    def validate(self, d: int) -> None:
        if self.family is VelocityFamily.POWER_LAW:
            lo = gamma_lower(d)
            if not (lo < self.gamma <= 1):
                raise KernelError(
                    f"gamma must lie in ({lo:g}, 1] for PowerLaw in d={d}"
                )

    @property
    def singular_at_zero(self) -> bool:
        """True when A(0) is not finite (unclamped power law with 2+gamma <= 0)."""
        return (
            self.family is VelocityFamily.POWER_LAW
            and self.clamp_n is None
            and 2 + self.gamma <= 0
        )

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "gamma": self.gamma,
            "clamp_n": self.clamp_n,
            "scale": self.scale,
        }


@dataclass(frozen=True)
class SpatialKernelSpec:
    family: SpatialFamily = SpatialFamily.UNIFORM
    value: float = 1.0
    k2: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", SpatialFamily(self.family))
        if self.family is SpatialFamily.UNIFORM and self.value < 0:
            raise KernelError("uniform kappa must be nonnegative")
        if self.family is SpatialFamily.EXP_DECAY and not self.k2 > 0:
            raise KernelError("ExpDecay rate k2 must be positive")

    def to_dict(self) -> dict:
        if self.family is SpatialFamily.UNIFORM:
            return {"family": self.family.value, "value": self.value}
        return {"family": self.family.value, "k2": self.k2}


# -- radial profile ---------------------------------------------------------


def _A_raw(spec: VelocityKernelSpec, r: np.ndarray) -> np.ndarray:
    g = spec.gamma
    if spec.family is VelocityFamily.POWER_LAW:
        with np.errstate(divide="ignore"):
            return np.power(r, 2.0 + g)
    if spec.family is VelocityFamily.BOUNDED_SOFT:
        return spec.scale * bracket(r) ** (2.0 + g)
    return spec.scale * r**2 * bracket(r) ** g


def _dA_raw(spec: VelocityKernelSpec, r: np.ndarray) -> np.ndarray:
    g = spec.gamma
    if spec.family is VelocityFamily.POWER_LAW:
        with np.errstate(divide="ignore"):
            return (2.0 + g) * np.power(r, 1.0 + g)
    if spec.family is VelocityFamily.BOUNDED_SOFT:
        return spec.scale * (2.0 + g) * bracket(r) ** g * r
    br = bracket(r)
    return spec.scale * (2 * r * br**g + g * r**3 * br ** (g - 2))


def _clamp_radius(spec: VelocityKernelSpec, r: np.ndarray) -> np.ndarray:
    # The transition bands [1/(n+1), 1/n] and [n, n+1] interpolate linearly
    # between equal end values, so the clamped kernel is A(clip(r, 1/n, n)).
    n = float(spec.clamp_n)
    return np.clip(r, 1.0 / n, n)


def A_value(spec: VelocityKernelSpec, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise KernelError("r must be nonnegative")
    if spec.clamp_n is not None:
        return _A_raw(spec, _clamp_radius(spec, r))
    if spec.singular_at_zero and np.any(r == 0):
        raise KernelError(
            "singular kernel at zero offset; enable clamp or rely on diagonal-pair exclusion"
        )
    return _A_raw(spec, r)


def A_derivative(spec: VelocityKernelSpec, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if spec.clamp_n is not None:
        n = float(spec.clamp_n)
        inside = (r >= 1.0 / n) & (r <= n)
        return np.where(inside, _dA_raw(spec, _clamp_radius(spec, r)), 0.0)
    return _dA_raw(spec, r)


# -- tensor coefficients ----------------------------------------------------


def projector(z) -> np.ndarray:
    """Id - z z^T / |z|^2, and the zero matrix at z = 0. Vectorised over leading axes."""
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    r2 = np.sum(z * z, axis=-1)[..., None, None]
    safe = np.where(r2 > 0, r2, 1.0)
    P = np.eye(d) - z[..., :, None] * z[..., None, :] / safe
    return np.where(r2 > 0, P, 0.0)


def _radius(z: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(z * z, axis=-1))


def a_matrix(spec: VelocityKernelSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    r = _radius(z)
    nz = r > 0
    A = np.zeros_like(r)
    A[nz] = A_value(spec, r[nz])
    return A[..., None, None] * projector(z)


def b_vector(spec: VelocityKernelSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    r = _radius(z)
    if z.ndim == 1 and r == 0:
        raise KernelError("b is undefined at z = 0")
    nz = r > 0
    coef = np.zeros_like(r)
    coef[nz] = -(d - 1) * A_value(spec, r[nz]) / r[nz] ** 2
    return coef[..., None] * z


def c_scalar(spec: VelocityKernelSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    r = _radius(z)
    if z.ndim == 1 and r == 0:
        raise KernelError("c is undefined at z = 0")
    nz = r > 0
    out = np.zeros_like(r)
    rn = r[nz]
    out[nz] = -(d - 1) * (
        (d - 2) * A_value(spec, rn) / rn**2 + A_derivative(spec, rn) / rn
    )
    return out


# -- tables on grid offsets -------------------------------------------------


def minimal_image(m: np.ndarray, n: int) -> np.ndarray:
    """Signed minimal-image index offset for offsets ``m`` on a ring of ``n`` cells."""
    m = np.mod(m, n)
    return np.where(m > n // 2, m - n, m)


def kappa_table(spec: SpatialKernelSpec, grid: Grid) -> np.ndarray:
    """kappa on x-offsets, indexed by offset ``m`` (mod n_x) per axis; shape ``x_shape``."""
    n = grid.spec.n_x
    d = grid.d
    if spec.family is SpatialFamily.UNIFORM:
        return np.full((n,) * d, float(spec.value))
    disp = minimal_image(np.arange(n), n) * grid.dx
    mesh = np.meshgrid(*([disp] * d), indexing="ij")
    r = np.sqrt(sum(m**2 for m in mesh))
    shape = np.exp(-spec.k2 * bracket(r))
    k1 = 1.0 / (shape.sum() * grid.dx**d)
    return k1 * shape


def kappa_matrix(spec: SpatialKernelSpec, grid: Grid) -> np.ndarray:
    """Dense (N_x, N_x) matrix kappa(x_p - x_q) over flattened spatial cells."""
    table = kappa_table(spec, grid)
    n = grid.spec.n_x
    d = grid.d
    idx = np.stack(np.meshgrid(*([np.arange(n)] * d), indexing="ij"), -1).reshape(-1, d)
    off = np.mod(idx[:, None, :] - idx[None, :, :], n)
    return table[tuple(off[..., k] for k in range(d))]


def velocity_offsets(grid: Grid) -> np.ndarray:
    """Offsets v_p - v_q on the grid, shape ``(2 n_v - 1,)*d + (d,)``; index n_v-1 is zero."""
    n = grid.spec.n_v
    o = (np.arange(2 * n - 1) - (n - 1)) * grid.dv
    return np.stack(np.meshgrid(*([o] * grid.d), indexing="ij"), axis=-1)


@dataclass
class OffsetTables:
    """A, a, b, c evaluated on every grid velocity offset (zero offset set to 0)."""

    z: np.ndarray
    A: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray


def offset_tables(spec: VelocityKernelSpec, grid: Grid) -> OffsetTables:
    z = velocity_offsets(grid)
    r = _radius(z)
    nz = r > 0
    A = np.zeros_like(r)
    A[nz] = A_value(spec, r[nz])
    return OffsetTables(
        z=z, A=A, a=a_matrix(spec, z), b=b_vector(spec, z), c=c_scalar(spec, z)
    )
