"""Scalar functionals: entropy, weighted Fisher information, moments and norms."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import Field
from .kernels import bracket


class NormKind(str, Enum):
    LP = "Lp"
    L1AB = "L1ab"
    MIXED_L1X_LPV = "MixedL1xLpv"
    MIXED_LPV_L1X = "MixedLpvL1x"
    MOMENT = "Moment_s"
    WEIGHTED_LK = "WeightedLk"


@dataclass(frozen=True)
class NormSpec:
    kind: NormKind
    p: float = 1.0
    a: float = 0.0
    b: float = 0.0
    s: float = 0.0
    weight: float = 0.0  # velocity weight exponent for WeightedLk

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NormKind(self.kind))
        if not (1 <= self.p <= np.inf):
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if self.s < 0:
            raise ValueError(f"s must be nonnegative, got {self.s}")


def _vbracket(f: Field) -> np.ndarray:
    return bracket(np.sqrt(f.grid.v_squared))


def entropy(f: Field) -> float:
    """w * sum f log f, with 0 log 0 = 0."""
    v = f.values
    if np.any(v < 0):
        raise ValueError("entropy of a field with negative cells")
    pos = v > 0
    return float(np.sum(v[pos] * np.log(v[pos])) * f.grid.cell_volume)


def fisher(f: Field, gamma: float = 0.0) -> float:
    """Weighted Fisher information w * sum <v>^gamma |D sqrt f|^2."""
    root = np.sqrt(np.maximum(f.values, 0.0))
    grad = f.grid.grad_v(root)
    dens = np.sum(grad**2, axis=-1) * _vbracket(f) ** gamma
    return float(dens.sum() * f.grid.cell_volume)


def moment(f: Field, s: float) -> float:
    """M_s = w * sum <v>^s f."""
    return float(np.sum(_vbracket(f) ** s * f.values) * f.grid.cell_volume)


def _lp(values: np.ndarray, p: float, measure: float, axes) -> np.ndarray:
    a = np.abs(values)
    if np.isinf(p):
        return a.max(axis=axes)
    return (np.sum(a**p, axis=axes) * measure) ** (1.0 / p)


def lp_norm(f: Field, p: float) -> float:
    g = f.grid
    return float(_lp(f.values, p, g.cell_volume, None))


def mixed_l1x_lpv(values: np.ndarray, grid, p: float) -> float:
    """||f||_{L^1_x L^p_v}: L^p in v first, then L^1 in x."""
    inner = _lp(values, p, grid.dv**grid.d, grid.v_axes)
    return float(inner.sum() * grid.dx**grid.d)


def mixed_lpv_l1x(values: np.ndarray, grid, p: float) -> float:
    """||f||_{L^p_v L^1_x}: L^1 in x first, then L^p in v."""
    inner = np.abs(values).sum(axis=grid.x_axes) * grid.dx**grid.d
    return float(_lp(inner, p, grid.dv**grid.d, None))


def norm(f: Field, spec: NormSpec) -> float:
    g = f.grid
    k = spec.kind
    if k is NormKind.LP:
        return lp_norm(f, spec.p)
    if k is NormKind.L1AB:
        xb = bracket(np.sqrt(g.x_squared))
        w = xb**spec.a + _vbracket(f) ** spec.b
        return float(np.sum(w * np.abs(f.values)) * g.cell_volume)
    if k is NormKind.MIXED_L1X_LPV:
        return mixed_l1x_lpv(f.values, g, spec.p)
    if k is NormKind.MIXED_LPV_L1X:
        return mixed_lpv_l1x(f.values, g, spec.p)
    if k is NormKind.MOMENT:
        return moment(f, spec.s)
    # WeightedLk: ||<v>^weight f||_{L^1_x L^p_v}
    return mixed_l1x_lpv(_vbracket(f) ** spec.weight * f.values, g, spec.p)
