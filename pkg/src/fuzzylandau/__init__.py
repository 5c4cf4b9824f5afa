"""Structure-preserving solver and diagnostics for the fuzzy Landau equation."""

from .grid import Field, Grid, GridSpec, VField, build_grid, gradient_v, integrate, marginal_over_x, maxwellian
from .kernels import SpatialFamily, SpatialKernelSpec, VelocityFamily, VelocityKernelSpec
from .collision import CollisionOperator
from .functionals import NormKind, NormSpec, entropy, fisher, moment, norm
from .solver import SolverConfig, homogeneous_run, run, step

__all__ = [
    "Field",
    "Grid",
    "GridSpec",
    "VField",
    "build_grid",
    "gradient_v",
    "integrate",
    "marginal_over_x",
    "maxwellian",
    "SpatialFamily",
    "SpatialKernelSpec",
    "VelocityFamily",
    "VelocityKernelSpec",
    "CollisionOperator",
    "NormKind",
    "NormSpec",
    "entropy",
    "fisher",
    "moment",
    "norm",
    "SolverConfig",
    "homogeneous_run",
    "run",
    "step",
]

__version__ = "0.1.0"
