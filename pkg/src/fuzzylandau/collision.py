"""Convolved collision coefficients and the two discrete collision operators.

The *metric* form is the structure-preserving one.  With ``g = D(log f)`` the
discrete velocity gradient of ``log f`` and ``Div = -D^T`` its adjoint,

    Phi_p = w * sum_q kappa(x_p - x_q) A(|v_p - v_q|) Pi_pq (g_p - g_q) f_q
    Q_p   = Div(f Phi)_p

so that, by pairwise symmetry, ``<phi, Q> = 0`` for ``phi`` in {1, v, |v|^2}
(``D`` is exact on quadratics and ``Pi_pq`` kills ``v_p - v_q``) and
``<log f, Q> = -D(f)`` with ``D(f)`` a sum of nonnegative pair terms.

``Phi`` is evaluated without an explicit double loop: expanding the pair sum,

    Phi = abar * g - conv(a, f g),

where both terms are kappa-in-x, a-in-v convolutions.  Those convolutions are
computed either by dense factorised sums (``backend="direct"``) or by FFT
(``backend="fft"``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Tuple

import numba
import numpy as np

from .grid import Field, Grid
from .kernels import (
    KernelError,
    SpatialKernelSpec,
    VelocityKernelSpec,
    a_matrix,
    kappa_matrix,
    kappa_table,
    offset_tables,
)

BACKENDS = ("direct", "fft")
GRADIENTS = ("log", "linear")


class PositivityError(ValueError):
    """A cell is nonpositive where log f is required."""


@dataclass
class CoefficientField:
    a_bar: np.ndarray  # grid.shape + (d, d)
    b_bar: np.ndarray  # grid.shape + (d,)
    c_bar: np.ndarray  # grid.shape


def _sym_pairs(d: int):
    return [(i, j) for i in range(d) for j in range(i, d)]


class CollisionOperator:
    """Precomputed offset tables and convolution machinery for one grid and kernel pair.

    This plays the role of the pair context: it owns A, Pi and kappa on every
    grid offset, and evaluates coefficient convolutions, the metric and
    divergence right-hand sides and the pairwise dissipation.
    """

    def __init__(
        self,
        grid: Grid,
        vspec: VelocityKernelSpec,
        sspec: SpatialKernelSpec,
        backend: str = "direct",
        gradient: str = "log",
    ):
        if gradient not in GRADIENTS:
            raise ValueError(f"gradient must be one of {GRADIENTS}, got {gradient!r}")
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
        vspec.validate(grid.d)
        if vspec.singular_at_zero:
            raise KernelError(
                f"PowerLaw gamma={vspec.gamma} <= -2 is singular at zero offset; "
                "set clamp_n"
            )
        self.grid = grid
        self.vspec = vspec
        self.sspec = sspec
        self.backend = backend
        self.gradient = gradient
        self.tables = offset_tables(vspec, grid)
        self.kappa = kappa_table(sspec, grid)
        d = grid.d
        self._kernels: Dict[str, np.ndarray] = {}
        for i, j in _sym_pairs(d):
            self._kernels[f"a{i}{j}"] = self.tables.a[..., i, j]
        for i in range(d):
            self._kernels[f"b{i}"] = self.tables.b[..., i]
        self._kernels["c"] = self.tables.c
        self._cache: Dict[str, np.ndarray] = {}

    # -- convolution backends ------------------------------------------------

    @property
    def n_xcells(self) -> int:
        return int(np.prod(self.grid.x_shape))

    @property
    def n_vcells(self) -> int:
        return int(np.prod(self.grid.v_shape))

    @cached_property
    def _kx_matrix(self) -> np.ndarray:
        return kappa_matrix(self.sspec, self.grid)

    @cached_property
    def _voffset_index(self) -> Tuple[np.ndarray, ...]:
        n = self.grid.spec.n_v
        d = self.grid.d
        idx = np.stack(
            np.meshgrid(*([np.arange(n)] * d), indexing="ij"), -1
        ).reshape(-1, d)
        off = idx[:, None, :] - idx[None, :, :] + (n - 1)
        return tuple(off[..., k] for k in range(d))

    def _dense(self, key: str) -> np.ndarray:
        M = self._cache.get("dense_" + key)
        if M is None:
            M = self._kernels[key][self._voffset_index]
            self._cache["dense_" + key] = M
        return M

    @cached_property
    def _pad_shape(self) -> tuple:
        n = self.grid.spec.n_v
        return self.grid.x_shape + (2 * n,) * self.grid.d

    def _spectrum_of_kernel(self, key: str) -> np.ndarray:
        S = self._cache.get("fft_" + key)
        if S is None:
            n = self.grid.spec.n_v
            d = self.grid.d
            L = 2 * n
            table = self._kernels[key]
            padv = np.zeros((L,) * d)
            src = np.arange(2 * n - 1) - (n - 1)
            dst = np.mod(src, L)
            padv[np.ix_(*([dst] * d))] = table
            full = self.kappa.reshape(self.grid.x_shape + (1,) * d) * padv.reshape(
                (1,) * d + (L,) * d
            )
            S = np.fft.rfftn(full)
            self._cache["fft_" + key] = S
        return S

    def _forward(self, values: np.ndarray):
        if self.backend == "direct":
            return values.reshape(self.n_xcells, self.n_vcells)
        return np.fft.rfftn(values, s=self._pad_shape, axes=tuple(range(2 * self.grid.d)))

    def _apply(self, key: str, fwd) -> np.ndarray:
        g = self.grid
        if self.backend == "direct":
            T = fwd @ self._dense(key).T
            out = self._kx_matrix @ T
            return out.reshape(g.shape) * g.cell_volume
        full = np.fft.irfftn(
            self._spectrum_of_kernel(key) * fwd, s=self._pad_shape, axes=tuple(range(2 * g.d))
        )
        n = g.spec.n_v
        crop = (slice(None),) * g.d + (slice(0, n),) * g.d
        return full[crop] * g.cell_volume

    def convolve(self, key: str, values: np.ndarray) -> np.ndarray:
        """w * sum_{x*, v*} kappa(x - x*) K(v - v*) values(x*, v*) for kernel ``key``."""
        return self._apply(key, self._forward(values))

    # -- coefficients ----------------------------------------------------------

    def _a_bar_from(self, fwd) -> np.ndarray:
        d = self.grid.d
        out = np.empty(self.grid.shape + (d, d))
        for i, j in _sym_pairs(d):
            out[..., i, j] = self._apply(f"a{i}{j}", fwd)
            out[..., j, i] = out[..., i, j]
        return out

    def assemble(self, f: Field) -> CoefficientField:
        fwd = self._forward(f.values)
        d = self.grid.d
        a_bar = self._a_bar_from(fwd)
        b_bar = np.stack([self._apply(f"b{i}", fwd) for i in range(d)], axis=-1)
        c_bar = self._apply("c", fwd)
        return CoefficientField(a_bar, b_bar, c_bar)

    def coefficients_at(self, f: Field, x_index: tuple, v) -> np.ndarray:
        """abar at spatial cell ``x_index`` and an arbitrary velocity ``v`` (direct sum)."""
        g = self.grid
        v = np.asarray(v, dtype=float)
        kap = self._kx_row(x_index)  # x_shape
        rho = np.tensordot(kap, f.values, axes=(list(range(g.d)), list(range(g.d))))
        z = v - g.v_points
        a = a_matrix(self.vspec, z)
        return g.cell_volume * np.tensordot(rho, a, axes=(list(range(g.d)),) * 2)

    def _kx_row(self, x_index: tuple) -> np.ndarray:
        n = self.grid.spec.n_x
        d = self.grid.d
        idx = [np.mod(x_index[k] - np.arange(n), n) for k in range(d)]
        return self.kappa[np.ix_(*idx)]

    # -- operators -------------------------------------------------------------

    def log_gradient(self, values: np.ndarray) -> np.ndarray:
        """``D(log f)`` (default) or ``D(f) / f`` when ``gradient="linear"``."""
        if np.any(values <= 0):
            raise PositivityError("nonpositive cell; log f undefined (apply the floor)")
        if self.gradient == "linear":
            return self.grid.grad_v(values) / values[..., None]
        return self.grid.grad_v(np.log(values))

    def metric_flux_potential(self, values: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Phi = abar g - conv(a, f g)."""
        d = self.grid.d
        fwd_f = self._forward(values)
        fwd_fg = [self._forward(values * g[..., j]) for j in range(d)]
        Phi = np.zeros(self.grid.shape + (d,))
        for i, j in _sym_pairs(d):
            key = f"a{i}{j}"
            abar = self._apply(key, fwd_f)
            Phi[..., i] += abar * g[..., j] - self._apply(key, fwd_fg[j])
            if i != j:
                Phi[..., j] += abar * g[..., i] - self._apply(key, fwd_fg[i])
        return Phi

    def rhs_metric(self, f: Field, return_dissipation: bool = False):
        v = f.values
        g = self.log_gradient(v)
        Phi = self.metric_flux_potential(v, g)
        rhs = self.grid.div_v(v[..., None] * Phi)
        if return_dissipation:
            D = float(np.sum(v[..., None] * g * Phi) * self.grid.cell_volume)
            return rhs, D
        return rhs

    def rhs_divergence(self, f: Field, coeffs: Optional[CoefficientField] = None):
        if coeffs is None:
            coeffs = self.assemble(f)
        v = f.values
        grad = self.grid.grad_v(v)
        flux = np.einsum("...ij,...j->...i", coeffs.a_bar, grad) - coeffs.b_bar * v[..., None]
        return self.grid.div_v(flux)

    # -- pairwise dissipation ---------------------------------------------------

    @cached_property
    def _vcell_index(self) -> np.ndarray:
        n = self.grid.spec.n_v
        d = self.grid.d
        return np.indices((n,) * d).reshape(d, -1).T.astype(np.int64).copy()

    def dissipation_pairs(self, f: Field) -> float:
        """1/2 w^2 sum_{p != q} kappa A f_p f_q |Pi (g_p - g_q)|^2, each term >= 0."""
        v = f.values
        nx, nv = self.n_xcells, self.n_vcells
        g = self.log_gradient(v).reshape(nx, nv, self.grid.d)
        total = _pair_dissipation(
            np.ascontiguousarray(v.reshape(nx, nv)),
            np.ascontiguousarray(g),
            self._vcell_index,
            self.tables.A.reshape(-1),
            np.ascontiguousarray(self._kx_matrix),
            self.grid.spec.n_v,
            self.grid.dv,
        )
        return float(total) * self.grid.cell_volume**2


@numba.njit(cache=True)
def _pair_dissipation(f, g, vi, Atab, K, nv, dv):
    # f: (Nx, Nv); g: (Nx, Nv, d); vi: (Nv, d) velocity multi-indices; K: (Nx, Nx)
    nx = f.shape[0]
    nvc = f.shape[1]
    d = g.shape[2]
    total = 0.0
    z = np.empty(d)
    dg = np.empty(d)
    for p in range(nvc):
        for q in range(p + 1, nvc):
            ia = 0
            zz = 0.0
            for k in range(d):
                off = vi[p, k] - vi[q, k]
                ia = ia * (2 * nv - 1) + (off + nv - 1)
                z[k] = off * dv
                zz += z[k] * z[k]
            A = Atab[ia]
            if A == 0.0:
                continue
            for xp in range(nx):
                fp = f[xp, p]
                for xq in range(nx):
                    wgt = K[xp, xq] * A * fp * f[xq, q]
                    if wgt == 0.0:
                        continue
                    zd = 0.0
                    for k in range(d):
                        dg[k] = g[xp, p, k] - g[xq, q, k]
                        zd += z[k] * dg[k]
                    s = zd / zz
                    perp = 0.0
                    for k in range(d):
                        r = dg[k] - s * z[k]
                        perp += r * r
                    total += wgt * perp
    return total


# -- functional interface -----------------------------------------------------


def assemble_coefficients(
    f: Field, vspec: VelocityKernelSpec, sspec: SpatialKernelSpec, backend: str = "direct"
) -> CoefficientField:
    return CollisionOperator(f.grid, vspec, sspec, backend).assemble(f)


def collision_rhs_metric(
    f: Field, vspec: VelocityKernelSpec, sspec: SpatialKernelSpec, floor: float = 0.0
) -> np.ndarray:
    if floor > 0:
        f = f.with_values(np.maximum(f.values, floor))
    return CollisionOperator(f.grid, vspec, sspec).rhs_metric(f)


def collision_rhs_divergence(
    f: Field, coeffs: CoefficientField, vspec=None, sspec=None
) -> np.ndarray:
    g = f.grid
    grad = g.grad_v(f.values)
    flux = np.einsum("...ij,...j->...i", coeffs.a_bar, grad) - coeffs.b_bar * f.values[..., None]
    return g.div_v(flux)


def dissipation(
    f: Field, vspec: VelocityKernelSpec, sspec: SpatialKernelSpec, floor: float = 0.0
) -> float:
    if floor > 0:
        f = f.with_values(np.maximum(f.values, floor))
    return CollisionOperator(f.grid, vspec, sspec).dissipation_pairs(f)
