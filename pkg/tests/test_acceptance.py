"""Exit criteria, run on the default study: gaussian(1, 1), Burgers, T = 2,
domain [-20, 20], ell in {0.2, 0.1, 0.05, 0.025}, dx = ell / 8."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rblab.diagnostics import oleinik_bound, slope_allowance, tv_bound
from rblab.entropy import EntropyRunConfig, analytic_riemann_eval, run_entropy
from rblab.flux import make_burgers
from rblab.grid import Grid1D, InitialDatum
from rblab.harness import StudyConfig, emit_report, run_rate_study
from rblab.helmholtz import HelmholtzSolver
from rblab.rb import RBRunConfig, ViscosityPolicy, run_rb


def verdict(num, name, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] C{num:<2} {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def study():
    t0 = time.perf_counter()
    r = run_rate_study(StudyConfig(), workers=1)
    return r, time.perf_counter() - t0


def test_c01_helmholtz_oracles():
    HelmholtzSolver(0.1, Grid1D(-3, 3, 256)).solve(np.zeros(256))  # JIT warm-up
    HelmholtzSolver(0.1, Grid1D(-3, 3, 256), "green").solve(np.zeros(256))
    t0 = time.perf_counter()
    diffs = []
    for n in (256, 512):
        g = Grid1D(-3, 3, n)
        rhs = np.exp(-g.x**2 / 0.25)
        P = HelmholtzSolver(0.1, g).solve(rhs)
        Pg = HelmholtzSolver(0.1, g, "green").solve(rhs)
        diffs.append(np.abs(P - Pg).max())
        if n == 256:
            b = 0.1**2 / g.dx**2
            A = (np.diag(np.full(n, 1 + 2 * b)) + np.diag(np.full(n - 1, -b), 1)
                 + np.diag(np.full(n - 1, -b), -1))
            Pd = np.linalg.solve(A, rhs)
            rel = np.abs(P - Pd).max() / np.abs(Pd).max()
    elapsed = time.perf_counter() - t0
    order = np.log2(diffs[0] / diffs[1])
    ok = rel <= 1e-10 and order >= 1.8 and elapsed < 1.0
    verdict(1, "helmholtz oracle equivalence", ok,
            f"dense rel={rel:.2e} (<=1e-10), green-vs-tridiag order={order:.3f} (>=1.8), "
            f"{elapsed:.3f}s (<1s)")


def test_c02_entropy_oracles():
    m = make_burgers()
    t0 = time.perf_counter()
    g = Grid1D(-2, 2, 1024, left_value=1.0, right_value=0.0)
    u = run_entropy(EntropyRunConfig(m, g, None, 1.0, initial=np.where(g.x < 0, 1.0, 0.0))).states[-1]
    shock = g.x[np.argmax(u < 0.5)] - 0.5 * g.dx
    g2 = Grid1D(-2, 2, 1024, left_value=0.0, right_value=1.0)
    u2 = run_entropy(EntropyRunConfig(m, g2, None, 1.0, initial=np.where(g2.x < 0, 0.0, 1.0))).states[-1]
    err = g2.dx * np.abs(u2 - analytic_riemann_eval(m, 0.0, 1.0, g2.x, 1.0)).sum()
    bound = 5 * g2.dx * (1 + abs(np.log(g2.dx)))
    elapsed = time.perf_counter() - t0
    ok = abs(shock - 0.5) <= g.dx and err <= bound and elapsed < 5.0
    verdict(2, "entropy solver oracle equivalence", ok,
            f"shock at {shock:.5f} (0.5 +- {g.dx:.5f}), rarefaction L1={err:.2e} "
            f"(<= {bound:.3e}), {elapsed:.2f}s (<5s)")


def test_c03_oleinik(study):
    r, _ = study
    M, c1 = r.config.datum.M, r.config.flux.c1
    violations, checked, worst = 0, 0, np.inf
    for mres in r.members:
        for rec in mres.diagnostics:
            if 0.1 <= rec.t <= 2.0:
                allow = slope_allowance(oleinik_bound(rec.t, c1, M), mres.n)
                checked += 1
                violations += rec.sup_fwd_slope > allow
                worst = min(worst, allow - rec.sup_fwd_slope)
    verdict(3, "Oleinik inequality", violations == 0,
            f"{violations} violations in {checked} records, min margin {worst:.3e}")


def test_c04_bv_growth(study):
    r, _ = study
    d, m = r.config.datum, r.config.flux
    worst = min(1.05 * tv_bound(rec.t, m.c1, m.c2, d.M, d.tv0) - rec.tv
                for mres in r.members for rec in mres.diagnostics)
    incr = max(float(np.max(np.diff(mres.ref_tv_steps))) for mres in r.members)
    verdict(4, "BV growth bound", worst >= 0 and incr <= 1e-12,
            f"min margin to 1.05*bound {worst:.3e}; entropy max TV increase/step {incr:.1e} (<=1e-12)")


def test_c05_energy(study):
    r, _ = study
    rise = max(float(np.max(np.diff([rec.energy for rec in mres.diagnostics])))
               for mres in r.members)
    m, d = make_burgers(), InitialDatum("gaussian", 1.0, 1.0)
    g = Grid1D(-10, 10, 2048)
    tr = run_rb(RBRunConfig(m, g, d, 0.2, 0.5, ViscosityPolicy("none", 0.0)))
    e = np.array(tr.series["energy"])
    drift = abs(e[-1] - e[0]) / e[0]
    verdict(5, "energy dissipation", rise <= 1e-8 and drift <= 1e-4,
            f"max energy rise/step {rise:.2e} (<=1e-8); inviscid pre-shock drift {drift:.2e} (<=1e-4)")


def test_c06_ell2P_bracket(study):
    r, _ = study
    c1, c2 = r.config.flux.c1, r.config.flux.c2
    worst = np.inf
    for mres in r.members:
        for rec in mres.snapshot_diagnostics:
            lo, hi = 0.5 * c1 * rec.l2q2, 0.5 * c2 * rec.l2q2
            worst = min(worst, (rec.l2P_int - lo) / hi, (hi - rec.l2P_int) / hi)
    verdict(6, "integrated ell^2 P bracket", worst >= -1e-6,
            f"min relative margin {worst:.2e} (>= -1e-6)")


def test_c07_int_l2P_decay(study):
    r, elapsed = study
    s = r.slopes["int_l2P"][0]
    verdict(7, "decay of int int ell^2 P", s >= 0.9 and elapsed < 600,
            f"slope {s:.4f} (>=0.9), sweep {elapsed:.1f}s (<600s)")


def test_c08_zeta_decay(study):
    r, _ = study
    s = r.slopes["sup_zeta_l1"][0]
    verdict(8, "zeta-fluctuation decay", s >= 0.9, f"slope {s:.4f} (>=0.9)")


def test_c09_convergence_rate(study):
    r, _ = study
    rows = r.table()
    ells = np.array([row["ell"] for row in rows])
    err1 = np.array([row["err_l1"] for row in rows])
    ratio = err1 / np.sqrt(ells)
    C = ratio[0]
    a_ok = bool(np.all(ratio[1:] <= 1.1 * ratio[:-1]) and np.all(ratio <= 1.1 * C))
    s1, s2, s4 = (r.slopes[k][0] for k in ("err_l1", "err_l2", "err_l4"))
    ok = a_ok and s1 >= 0.45 and s2 >= 0.20
    verdict(9, "convergence rate", ok,
            f"(a) err_L1/sqrt(ell)={np.array2string(ratio, precision=4)} C={C:.4f}; "
            f"(b) L1 slope {s1:.4f} (>=0.45); (c) L2 slope {s2:.4f} (>=0.20); "
            f"L4 slope {s4:.4f} (info)")


def test_c10_determinism(study, tmp_path):
    r, _ = study
    again = run_rate_study(StudyConfig(), workers=1)
    parallel = run_rate_study(StudyConfig(), workers=2)
    for name, res in (("a", r), ("b", again), ("c", parallel)):
        emit_report(res, tmp_path / name)
    blobs = [(tmp_path / n / "study.csv").read_bytes() for n in "abc"]
    verdict(10, "determinism", blobs[0] == blobs[1] == blobs[2],
            "serial rerun and 2-worker run produce byte-identical study.csv")
