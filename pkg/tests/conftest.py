import numpy as np
import pytest

from fuzzylandau.grid import Field, Grid, GridSpec


def two_gaussian(grid: Grid, seed: int = 0) -> Field:
    """Unit-mass sum of two anisotropic Gaussians in v with a travelling cosine in x."""
    rng = np.random.default_rng(seed)
    v0, v1 = grid.v_component(0), grid.v_component(1)
    xs = sum(grid.x_component(k) for k in range(grid.d))
    out = 0.0
    for _ in range(2):
        c = rng.uniform(-1, 1, 2)
        s = rng.uniform(0.8, 1.3, 2)
        ph = rng.uniform(0, 2 * np.pi)
        out = out + rng.uniform(0.5, 1) * np.exp(
            -0.5 * ((v0 - c[0]) ** 2 / s[0] ** 2 + (v1 - c[1]) ** 2 / s[1] ** 2)
        ) * (1 + 0.3 * np.cos(2 * np.pi * xs + ph))
    vals = np.broadcast_to(out, grid.shape).copy()
    return Field(grid, vals / (vals.sum() * grid.cell_volume))


@pytest.fixture(scope="session")
def ref_grid():
    return Grid(GridSpec(d=2, n_x=4, n_v=24, v_max=6.0))


@pytest.fixture(scope="session")
def small_grid():
    return Grid(GridSpec(d=2, n_x=2, n_v=12, v_max=5.0))
