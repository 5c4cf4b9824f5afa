"""Acceptance checks.

Each ``check_*`` function returns ``(passed, detail)``.  Under pytest every
check prints one ``criterion N: PASS|FAIL`` line and then asserts; running the
module directly prints the same lines without stopping at the first failure::

    python tests/test_acceptance.py
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import two_gaussian  # noqa: E402
from fuzzylandau import analysis  # noqa: E402
from fuzzylandau.cli import main as cli_main  # noqa: E402
from fuzzylandau.collision import CollisionOperator  # noqa: E402
from fuzzylandau.grid import Field, Grid, GridSpec, maxwellian  # noqa: E402
from fuzzylandau.kernels import SpatialKernelSpec, VelocityKernelSpec  # noqa: E402
from fuzzylandau.solver import NumericalError, SolverConfig, reduction_gaps, run  # noqa: E402

UNIFORM = SpatialKernelSpec("Uniform", 1.0)
EXPDECAY = SpatialKernelSpec("ExpDecay", k2=1.0)


def ref_grid(**kw) -> Grid:
    spec = dict(d=2, n_x=4, n_v=24, v_max=6.0)
    spec.update(kw)
    return Grid(GridSpec(**spec))


def check_conservation():
    g = ref_grid()
    f0 = two_gaussian(g, seed=0)
    op = CollisionOperator(g, VelocityKernelSpec("PowerLaw", 0.0), UNIFORM)
    tr = run(f0, SolverConfig(dt=1e-3, t_end=1.0, record_every=1000), op)
    a, b = tr.records[0], tr.records[-1]
    scale = float(np.sum(f0.values * np.sqrt(g.v_squared)) * g.cell_volume)
    dm = abs(b.mass - a.mass) / a.mass
    dp = float(np.abs(b.momentum - a.momentum).max()) / scale
    de = abs(b.energy - a.energy) / a.energy
    ok = len(tr.entropy_ledger) == 1000 and dm <= 1e-12 and dp <= 1e-10 and de <= 1e-9
    return ok, f"substeps={len(tr.entropy_ledger)} dmass={dm:.2e} dmom={dp:.2e} denergy={de:.2e}"


def check_h_theorem():
    g = ref_grid()
    f0 = two_gaussian(g, seed=0)
    op = CollisionOperator(g, VelocityKernelSpec("PowerLaw", 0.0), UNIFORM)
    ratio, dmin = {}, np.inf
    for dt in (1e-3, 5e-4):
        tr = run(f0, SolverConfig(dt=dt, t_end=0.2, record_every=20), op)
        dmin = min(dmin, tr.series("D").min(), min(r[4] for r in tr.entropy_ledger))
        ratio[dt] = float((tr.entropy_defects() / tr.entropy_drops()).max())
    shrink = ratio[1e-3] / ratio[5e-4]
    ok = dmin >= -1e-14 and ratio[1e-3] <= 5e-3 and 1.7 <= shrink <= 2.3
    return ok, f"min D={dmin:.2e} per-step defect ratio={ratio[1e-3]:.2e} shrink={shrink:.3f}"


def check_equilibrium():
    g = ref_grid()
    M = maxwellian(g)
    worst_rhs = worst_D = 0.0
    for vs in (
        VelocityKernelSpec("PowerLaw", 0.0),
        VelocityKernelSpec("PowerLaw", -1.0),
        VelocityKernelSpec("BoundedSoft", -2.0),
    ):
        for sk in (UNIFORM, EXPDECAY):
            rhs, D = CollisionOperator(g, vs, sk, backend="fft").rhs_metric(M, return_dissipation=True)
            worst_rhs = max(worst_rhs, np.abs(rhs).max() / M.values.max())
            worst_D = max(worst_D, abs(D) / M.mass)
    ok = worst_rhs <= 1e-12 and worst_D <= 1e-12
    return ok, f"max |rhs|/|M|={worst_rhs:.2e} max |D|/mass={worst_D:.2e}"


REDUCTION_KERNELS = (
    VelocityKernelSpec("PowerLaw", 0.0),
    VelocityKernelSpec("PowerLaw", -1.0),
    VelocityKernelSpec("BoundedSoft", -2.0),
)


def _reduction(gradient):
    g = ref_grid()
    f0 = two_gaussian(g, seed=0)
    out = {}
    for vs in REDUCTION_KERNELS:
        op = CollisionOperator(g, vs, UNIFORM, backend="fft", gradient=gradient)
        key = f"{vs.family.value}({vs.gamma:g})"
        try:
            out[key] = float(reduction_gaps(f0, SolverConfig(dt=1e-3, t_end=0.2), op).max())
        except NumericalError as exc:
            out[key] = str(exc)
    return out


def check_reduction():
    gaps = _reduction("log")
    ok = all(isinstance(v, float) and v <= 1e-12 for v in gaps.values())
    linear = _reduction("linear")
    fmt = lambda d: ", ".join(f"{k}: {v:.2e}" if isinstance(v, float) else f"{k}: {v}" for k, v in d.items())
    return ok, f"log gradient [{fmt(gaps)}]; linear gradient (info) [{fmt(linear)}]"


def check_coercivity():
    g = Grid(GridSpec(d=2, n_x=1, n_v=48, v_max=8.0))
    M = maxwellian(g)
    scan = lambda vs: analysis.coercivity_scan(M, CollisionOperator(g, vs, UNIFORM, backend="fft"))
    r0 = scan(VelocityKernelSpec("PowerLaw", 0.0))
    r1 = scan(VelocityKernelSpec("PowerLaw", -1.0))
    r2 = scan(VelocityKernelSpec("BoundedSoft", -2.0))
    rq = scan(VelocityKernelSpec("QuadraticWeighted", -2.0))
    ok = 0.9 <= r0.min_quotient <= 1.1 and r1.band_ratio <= 3 and r2.band_ratio <= 3
    ok = ok and all(r.random_check_ok for r in (r0, r1, r2))
    return ok, (
        f"gamma=0 min={r0.min_quotient:.4f}; band gamma=-1 {r1.band_ratio:.3f}, "
        f"BoundedSoft(-2) {r2.band_ratio:.3f}; QuadraticWeighted(-2) (info) {rq.band_ratio:.3f}"
    )


def check_two_forms():
    ratios = []
    for gam in (0.0, -1.0):
        gaps = []
        for nv in (32, 64):
            g = Grid(GridSpec(d=2, n_x=1, n_v=nv, v_max=8.0))
            f = two_gaussian(g, seed=0)
            op = CollisionOperator(g, VelocityKernelSpec("PowerLaw", gam), UNIFORM, backend="fft")
            a, b = op.rhs_metric(f), op.rhs_divergence(f)
            gaps.append(np.abs(a - b).sum() / np.abs(a).sum())
        ratios.append(gaps[0] / gaps[1])
    ok = all(3 <= r <= 5 for r in ratios)
    return ok, "L1 gap ratio under dv halving: " + ", ".join(f"{r:.3f}" for r in ratios)


def check_fast_path():
    g = Grid(GridSpec(d=2, n_x=4, n_v=12, v_max=5.0))
    fields = analysis.mixture_values(g, np.random.default_rng(2024), 10)
    worst = 0.0
    for vs in (VelocityKernelSpec("PowerLaw", -1.0), VelocityKernelSpec("BoundedSoft", -2.0)):
        direct = CollisionOperator(g, vs, EXPDECAY, backend="direct")
        fast = CollisionOperator(g, vs, EXPDECAY, backend="fft")
        for vals in fields:
            f = Field(g, vals)
            c1, c2 = direct.assemble(f), fast.assemble(f)
            for a, b in ((c1.a_bar, c2.a_bar), (c1.b_bar, c2.b_bar), (c1.c_bar, c2.c_bar)):
                scale = np.abs(a).max() or 1.0  # absolute gap for an identically zero table
                worst = max(worst, np.abs(a - b).max() / scale)
    return worst <= 1e-10, f"max relative gap={worst:.2e}"


def check_inequalities():
    cfg = analysis.SuiteConfig(samples=100_000, seed=0)
    parts, ok = [], True
    for name in ("peetre_corrected", "bracket_subadditivity", "holder_interpolation_2", "holder_interpolation_3"):
        rep = analysis.run_inequality_suite(name, cfg)
        ok &= rep.samples >= 100_000 and rep.violations == 0
        parts.append(f"{name}={rep.violations}")
    for name in ("hls_ratio", "sobolev_ratio"):
        rep = analysis.run_inequality_suite(name, cfg)
        ok &= rep.drift is not None and rep.drift <= 1e-6
        parts.append(f"{name} drift={rep.drift:.1e}")
    ce = analysis.peetre_counterexample()
    ok &= ce["lhs"] > ce["rhs"]
    parts.append(f"counterexample lhs={ce['lhs']:g} > rhs={ce['rhs']:g}")
    return bool(ok), "; ".join(parts)


def check_moments():
    g = ref_grid()
    op = CollisionOperator(g, VelocityKernelSpec("PowerLaw", 0.0), UNIFORM, backend="fft")
    tr = run(two_gaussian(g, seed=0), SolverConfig(dt=1e-3, t_end=0.4, record_every=4), op)
    lin = analysis.rate_fit(tr.times, tr.series("M4"), "M4", "linear", margin=0.05)

    gs = Grid(GridSpec(d=2, n_x=4, n_v=16, v_max=5.0))
    op = CollisionOperator(gs, VelocityKernelSpec("BoundedSoft", -2.0), EXPDECAY, backend="fft")
    tr = run(two_gaussian(gs, seed=0), SolverConfig(dt=0.02, t_end=10.0, record_every=10), op)
    pw = analysis.rate_fit(tr.times, tr.series("M4"), "M4", "power", theoretical=(4 - 2) / 3, margin=0.2)
    return lin.passed and pw.passed, (
        f"gamma=0 linear C={lin.slope:.3g} ok={lin.passed}; "
        f"gamma=-2 log-log slope={pw.slope:.3f} (bound {pw.theoretical + pw.margin:.3f})"
    )


def check_viscosity():
    g = ref_grid()
    f0 = maxwellian(g, temperature=0.5)  # negligible mass near |v| = v_max
    op = CollisionOperator(g, VelocityKernelSpec("PowerLaw", 0.0), UNIFORM)
    inv_n = 0.01
    tr = run(f0, SolverConfig(dt=1e-3, t_end=0.2, viscosity_inv_n=inv_n, record_every=10), op)
    expect = 2 * g.d * inv_n * f0.mass
    fit = analysis.rate_fit(tr.times, tr.series("M2"), "M2", "drift", theoretical=expect, margin=1e-4)
    rel = abs(fit.slope - expect) / expect
    return fit.passed, f"dM2/dt={fit.slope:.8f} expected 2d/n*mass={expect:.8f} rel={rel:.1e}"


def check_riccati():
    t = np.linspace(0, 0.7, 701)
    syn = analysis.riccati_bound_check(t, np.tan(np.pi / 4 + t))
    syn_ok = abs(syn.C - 1) <= 1e-3 and abs(syn.T_star - np.pi / 4) <= 1e-3

    g = Grid(GridSpec(d=3, n_x=2, n_v=12, v_max=4.0))
    vs = VelocityKernelSpec("PowerLaw", -2.5, clamp_n=10)
    op = CollisionOperator(g, vs, EXPDECAY, backend="fft")
    f0 = analysis.gaussian_mixture(g, seed=3)
    tr = run(f0, SolverConfig(dt=2e-3, t_end=1.0, record_every=50), op)
    res = analysis.riccati_bound_check(tr.times, tr.series("L2"))
    return syn_ok and res.violations == 0, (
        f"synthetic C={syn.C:.5f} T*={syn.T_star:.5f}; "
        f"clamped run C={res.C:.3g} violations={res.violations}"
    )


def check_determinism():
    cfg = {
        "grid": {"d": 2, "n_x": 2, "n_v": 12, "v_max": 5.0},
        "velocity_kernel": {"family": "PowerLaw", "gamma": -1.0},
        "spatial_kernel": {"family": "ExpDecay"},
        "solver": {"dt": 0.001, "t_end": 0.05, "record_every": 1},
        "initial": {"kind": "gaussian-mixture"},
        "backend": "fft",
        "seed": 17,
    }
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "cfg.json").write_text(json.dumps(cfg))
        codes, blobs = [], []
        for k in range(2):
            out = tmp / f"run{k}"
            codes.append(cli_main(["simulate", "--config", str(tmp / "cfg.json"), "--out", str(out), "--deterministic"]))
            blobs.append((out / "timeseries.csv").read_bytes())
    same = blobs[0] == blobs[1]
    return codes == [0, 0] and same, f"exit codes={codes} identical={same} bytes={len(blobs[0])}"


CRITERIA = [
    (1, "conservation ledger", check_conservation),
    (2, "discrete H-theorem", check_h_theorem),
    (3, "equilibrium exactness", check_equilibrium),
    (4, "homogeneous reduction", check_reduction),
    (5, "coercivity", check_coercivity),
    (6, "two-form consistency", check_two_forms),
    (7, "fast-path equality", check_fast_path),
    (8, "inequality suites", check_inequalities),
    (9, "moment propagation", check_moments),
    (10, "viscosity drift", check_viscosity),
    (11, "Riccati bound", check_riccati),
    (12, "determinism", check_determinism),
]


def line(n, title, ok, detail):
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} {title}: {detail}"


@pytest.mark.parametrize("n, title, check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(n, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + line(n, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for n, title, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(line(n, title, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
