"""ell-sweeps, log-log slope fits and the verdict on the scaling laws."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import (
    DiagnosticsRecord,
    FluctuationRecord,
    fluctuation,
    interpolation_constant,
    oleinik_bound,
    oleinik_bound_entropy,
    slope_allowance,
    tv_bound,
)
from .entropy import EntropyRunConfig, run_entropy
from .flux import FluxModel, make_burgers
from .grid import Grid1D, InitialDatum, restrict, total_variation
from .rb import RBRunConfig, ViscosityPolicy, run_rb

log = logging.getLogger(__name__)


class StudyError(RuntimeError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


def fmt(v: float) -> str:
    """17 significant digits: round-trips every double."""
    return format(float(v), ".17g")


def fit_loglog_slope(points) -> tuple[float, float, float]:
    """Least squares fit of ``log value = slope * log ell + intercept``.

    Returns ``(slope, intercept, rms residual)``. Points with non-positive
    values are dropped with a warning; fewer than three survivors is an error.
    """
    kept = []
    for ell, v in points:
        if v > 0 and ell > 0 and np.isfinite(v):
            kept.append((ell, v))
        else:
            log.warning("dropping point (%g, %g) from log-log fit", ell, v)
    if len(kept) < 3:
        raise StudyError(f"need at least 3 positive points for a slope fit, got {len(kept)}")
    x = np.log([p[0] for p in kept])
    y = np.log([p[1] for p in kept])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


@dataclass
class StudyConfig:
    flux: FluxModel = field(default_factory=make_burgers)
    datum: InitialDatum = field(default_factory=lambda: InitialDatum("gaussian", 1.0, 1.0))
    t_end: float = 2.0
    ell_list: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    p_list: tuple[int, ...] = (1, 2, 4)
    x_min: float = -20.0
    x_max: float = 20.0
    # "scaled": n0 cells at the largest ell, dx proportional to ell; "fixed": n cells for all
    grid_policy: str = "scaled"
    cells: int = 1600
    reference_refinement: int = 4
    snapshot_dt: float = 0.25
    viscosity: ViscosityPolicy = field(default_factory=ViscosityPolicy)
    cfl: float = 0.5
    ref_cfl: float = 0.9
    reconstruction: str = "muscl"
    helmholtz: str = "tridiagonal"
    workers: int = 1
    # rerun each reference at twice the refinement and compare errors
    verify_reference: bool = False

    def __post_init__(self) -> None:
        self.ell_list = tuple(float(e) for e in self.ell_list)
        if any(not 0.0 < e <= 1.0 for e in self.ell_list):
            raise ValueError("every ell must lie in (0, 1]")
        if list(self.ell_list) != sorted(self.ell_list, reverse=True) or len(set(self.ell_list)) != len(self.ell_list):
            raise ValueError("ell_list must be strictly decreasing")
        if self.grid_policy not in ("scaled", "fixed"):
            raise ValueError(f"unknown grid policy {self.grid_policy!r}")
        if self.reference_refinement < 4:
            raise ValueError("reference_refinement must be at least 4")
        if any(p not in (1, 2, 4) for p in self.p_list):
            raise ValueError("p_list must be drawn from {1, 2, 4}")
        for e in self.ell_list:
            if e < 4.0 * self.grid(e).dx * (1 - 1e-12):
                raise ValueError(f"ell={e} violates ell >= 4 dx under the grid policy")
        a = float(np.max(np.abs(self.flux.df(np.linspace(-self.datum_sup(), self.datum_sup(), 101)))))
        need = self.datum.support_radius + self.t_end * a + 10.0 * max(self.datum.sigma, 1.0)
        if min(-self.x_min, self.x_max) < need:
            raise ValueError(f"domain [{self.x_min}, {self.x_max}] too small: need radius >= {need:.3g}")

    def datum_sup(self) -> float:
        x = np.linspace(-self.datum.support_radius, self.datum.support_radius, 20001)
        return float(np.max(np.abs(self.datum(x))))

    def cells_for(self, ell: float) -> int:
        if self.grid_policy == "fixed":
            return self.cells
        return int(round(self.cells * self.ell_list[0] / ell))

    def grid(self, ell: float) -> Grid1D:
        return Grid1D(self.x_min, self.x_max, self.cells_for(ell))

    def snapshots(self) -> list[float]:
        k = int(np.floor(self.t_end / self.snapshot_dt + 1e-9))
        ts = [self.snapshot_dt * i for i in range(1, k + 1)]
        if not ts or ts[-1] < self.t_end - 1e-12:
            ts.append(self.t_end)
        return ts


@dataclass
class MemberResult:
    """Everything the verdict needs from one ``ell``."""

    ell: float
    n: int
    singular: bool
    diagnostics: list[DiagnosticsRecord]
    snapshot_diagnostics: list[DiagnosticsRecord]
    fluctuations: list[FluctuationRecord]
    ref_tv_steps: list[float]
    ref_slopes: list[tuple[float, float]]
    ref_tv_snapshots: list[float]
    ref_l1_err_2r: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def err(self) -> dict[int, float]:
        return {p: max(f.lp_err[p] for f in self.fluctuations) for p in (1, 2, 4)}

    @property
    def int_l2P(self) -> float:
        t = np.array([r.t for r in self.diagnostics])
        v = np.array([r.l2P_int for r in self.diagnostics])
        return float(np.trapezoid(v, t))

    @property
    def sup_zeta_l1(self) -> float:
        return max(f.zeta_l1 for f in self.fluctuations)


def _reference(cfg: StudyConfig, g: Grid1D, factor: int):
    ref = run_entropy(EntropyRunConfig(cfg.flux, g.refined(factor), cfg.datum, cfg.t_end,
                                       cfg.ref_cfl, 0.0, cfg.snapshots()))
    fine_series = ref.series
    ref.states = [restrict(u, factor) for u in ref.states]
    return ref, fine_series


def run_member(cfg: StudyConfig, ell: float) -> MemberResult:
    """One rB run and its refined Godunov reference."""
    g = cfg.grid(ell)
    rcfg = RBRunConfig(cfg.flux, g, cfg.datum, ell, cfg.t_end, cfg.viscosity, cfg.cfl,
                       cfg.snapshots(), cfg.reconstruction, cfg.helmholtz)
    traj = run_rb(rcfg)
    if traj.singular:
        return MemberResult(ell, g.n, True, [], [], [], [], [], [], meta=dict(traj.meta))
    s = traj.series
    keys = ("t", "energy", "tv", "sup_fwd_slope", "linf", "l2P_int", "l2qP_int",
            "boundary_residual", "l2q2")
    diags = [DiagnosticsRecord(*vals) for vals in zip(*(s[k] for k in keys))]
    snap_times = set(traj.times)
    snap_diags = [r for r in diags if r.t in snap_times]
    ref, fine = _reference(cfg, g, cfg.reference_refinement)
    fl = fluctuation(traj, ref, g)
    ref_2r = None
    if cfg.verify_reference:
        ref2, _ = _reference(cfg, g, 2 * cfg.reference_refinement)
        ref_2r = max(f.l1_err for f in fluctuation(traj, ref2, g))
    ref_dx = g.dx / cfg.reference_refinement
    ref_slopes = []
    for t, u in zip(ref.times, ref.states):
        ref_slopes.append((t, float(np.max(np.diff(u), initial=0.0)) / g.dx))
    meta = {"hash": traj.meta["hash"], "steps": traj.meta["steps"],
            "ref_steps": ref.meta["steps"], "ref_dx": ref_dx}
    return MemberResult(ell, g.n, False, diags, snap_diags, fl, list(fine["tv"]),
                        ref_slopes, [total_variation(u) for u in ref.states], ref_2r, meta)


def _member_job(args):
    return run_member(*args)


@dataclass
class Criterion:
    name: str
    passed: bool
    margin: float
    detail: str = ""
    informational: bool = False

    def line(self) -> str:
        tag = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return f"{tag} {self.name} margin={fmt(self.margin)} {self.detail}".rstrip()


@dataclass
class StudyResult:
    config: StudyConfig
    members: list[MemberResult]
    slopes: dict[str, tuple[float, float, float]] = field(default_factory=dict)
    criteria: list[Criterion] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria if not c.informational)

    def table(self) -> list[dict[str, float]]:
        rows = []
        for mres in self.members:
            e = mres.err
            rows.append({"ell": mres.ell, "err_l1": e[1], "err_l2": e[2], "err_l4": e[4],
                         "int_l2P": mres.int_l2P, "sup_zeta_l1": mres.sup_zeta_l1})
        return rows

    def criterion(self, name: str) -> Criterion:
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)


def resolve_workers(requested: int | None = None) -> int:
    env = os.environ.get("RBLAB_THREADS")
    if requested is not None and requested > 0:
        n = requested
    elif env:
        n = int(env)
    else:
        n = os.cpu_count() or 1
    if env:
        n = min(n, int(env))
    return max(1, n)


def run_rate_study(cfg: StudyConfig, workers: int | None = None) -> StudyResult:
    if len(cfg.ell_list) < 3:
        raise StudyError(f"need at least 3 values of ell, got {len(cfg.ell_list)}")
    nworkers = min(resolve_workers(workers or cfg.workers), len(cfg.ell_list))
    jobs = [(cfg, ell) for ell in cfg.ell_list]
    if nworkers > 1:
        with ProcessPoolExecutor(nworkers) as pool:
            members = list(pool.map(_member_job, jobs))
    else:
        members = [_member_job(j) for j in jobs]
    members.sort(key=lambda mres: -mres.ell)
    result = StudyResult(cfg, members)
    singular = [mres.ell for mres in members if mres.singular]
    if singular:
        raise StudyError(f"member runs flagged singular for ell={singular}", result)
    evaluate(result)
    return result


def evaluate(r: StudyResult) -> None:
    """Fill slopes and criteria from the member results."""
    cfg = r.config
    m, d = cfg.flux, cfg.datum
    c1, c2 = m.c1, m.c2
    table = r.table()
    ells = [row["ell"] for row in table]
    for key in ("err_l1", "err_l2", "err_l4", "int_l2P", "sup_zeta_l1"):
        r.slopes[key] = fit_loglog_slope([(row["ell"], row[key]) for row in table])
    crit = r.criteria

    # one-sided slope bound for every rB run
    worst, count = np.inf, 0
    for mres in r.members:
        for rec in mres.diagnostics:
            if rec.t < 0.1 - 1e-12:
                continue
            allow = slope_allowance(oleinik_bound(rec.t, c1, d.M), mres.n)
            worst = min(worst, allow - rec.sup_fwd_slope)
            count += rec.sup_fwd_slope > allow
    crit.append(Criterion("oleinik_rb", count == 0, worst, f"violations={count}"))

    # TV growth bound for rB, TV decay for the reference
    worst = np.inf
    for mres in r.members:
        for rec in mres.diagnostics:
            worst = min(worst, 1.05 * tv_bound(rec.t, c1, c2, d.M, d.tv0) - rec.tv)
    crit.append(Criterion("tv_bound_rb", worst >= 0, worst))
    worst = min(-float(np.max(np.diff(mres.ref_tv_steps), initial=-np.inf)) + 1e-12
                for mres in r.members)
    crit.append(Criterion("tv_decay_entropy", worst >= 0, worst, "per step, tol 1e-12"))
    worst, count = np.inf, 0
    for mres in r.members:
        for t, slope in mres.ref_slopes:
            if t < 0.1 - 1e-12:
                continue
            allow = slope_allowance(oleinik_bound_entropy(t, c1, d.M), mres.n)
            worst = min(worst, allow - slope)
            count += slope > allow
    crit.append(Criterion("oleinik_entropy", count == 0, worst, f"violations={count}"))

    # energy dissipation (only meaningful for viscous policies)
    if cfg.viscosity.kind != "none":
        worst = np.inf
        for mres in r.members:
            e = np.array([rec.energy for rec in mres.diagnostics])
            worst = min(worst, 1e-8 - float(np.max(np.diff(e), initial=-np.inf)))
        crit.append(Criterion("energy_dissipation", worst >= 0, worst, "per step, tol 1e-8"))

    # integrated P bracket
    worst = np.inf
    for mres in r.members:
        for rec in mres.diagnostics:
            lo, hi = 0.5 * c1 * rec.l2q2, 0.5 * c2 * rec.l2q2
            slack = 1e-6 * max(hi, 1e-300)
            worst = min(worst, (rec.l2P_int - lo + slack) / max(hi, 1e-300),
                        (hi + slack - rec.l2P_int) / max(hi, 1e-300))
    crit.append(Criterion("ell2P_bracket", worst >= 0, worst, "relative slack 1e-6"))

    s = r.slopes
    crit.append(Criterion("int_l2P_slope", s["int_l2P"][0] >= 0.9, s["int_l2P"][0] - 0.9,
                          f"slope={fmt(s['int_l2P'][0])} >= 0.9"))
    crit.append(Criterion("zeta_slope", s["sup_zeta_l1"][0] >= 0.9, s["sup_zeta_l1"][0] - 0.9,
                          f"slope={fmt(s['sup_zeta_l1'][0])} >= 0.9"))

    # rate: normalized L1 error, C calibrated at the largest ell
    err1 = np.array([row["err_l1"] for row in table])
    ratio = err1 / np.sqrt(ells)
    worst = float(np.min(1.1 * ratio[:-1] - ratio[1:])) if len(ratio) > 1 else 0.0
    worst = min(worst, float(np.min(1.1 * ratio[0] - ratio)))
    crit.append(Criterion("rate_l1_normalized", worst >= 0, worst / ratio[0],
                          f"C={fmt(ratio[0])}"))
    crit.append(Criterion("rate_l1_slope", s["err_l1"][0] >= 0.45, s["err_l1"][0] - 0.45,
                          f"slope={fmt(s['err_l1'][0])} >= 0.45"))
    crit.append(Criterion("rate_l2_slope", s["err_l2"][0] >= 0.20, s["err_l2"][0] - 0.20,
                          f"slope={fmt(s['err_l2'][0])} >= 0.20"))
    crit.append(Criterion("rate_l4_slope", True, s["err_l4"][0] - 0.125,
                          f"slope={fmt(s['err_l4'][0])} (exponent 1/8)", informational=True))

    # sanity: errors shrink with ell
    worst = np.inf
    for p, key in ((1, "err_l1"), (2, "err_l2"), (4, "err_l4")):
        e = np.array([row[key] for row in table])
        worst = min(worst, float(np.min(1.1 * e[:-1] - e[1:]) / e[0]))
    crit.append(Criterion("monotone_errors", worst >= 0, worst, "10% slack"))

    consts = []
    for mres in r.members:
        for fr, rec, tv_ref in zip(mres.fluctuations, mres.snapshot_diagnostics, mres.ref_tv_snapshots):
            consts.append(interpolation_constant(fr, rec.tv, tv_ref))
    cmax = max(consts, default=0.0)
    crit.append(Criterion("interpolation_constant", True, 2.0 - cmax,
                          f"max={fmt(cmax)}", informational=True))
    if cfg.verify_reference:
        worst = np.inf
        for mres in r.members:
            e1 = max(f.l1_err for f in mres.fluctuations)
            worst = min(worst, 0.2 - abs(e1 - mres.ref_l1_err_2r) / e1)
        crit.append(Criterion("reference_converged", worst >= 0, worst, "r vs 2r within 20%"))


STUDY_COLUMNS = ("ell", "err_l1", "err_l2", "err_l4", "int_l2P", "sup_zeta_l1")

PLOT_SCRIPT = '''"""Log-log plots of study.csv (regenerate with: python plot_study.py)."""
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

with open("study.csv") as fh:
    rows = list(csv.DictReader(fh))
ell = np.array([float(r["ell"]) for r in rows])
fig, ax = plt.subplots(figsize=(6, 5))
for key, ref in (("err_l1", 0.5), ("err_l2", 0.25), ("err_l4", 0.125),
                 ("int_l2P", 1.0), ("sup_zeta_l1", 1.0)):
    v = np.array([float(r[key]) for r in rows])
    q = np.polyfit(np.log(ell), np.log(v), 1)
    ax.loglog(ell, v, "o-", label=f"{key}: O(ell^{q[0]:.2f}), bound {ref}")
ax.set_xlabel("ell")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize=8)
fig.savefig("study.png", bbox_inches="tight", dpi=150)
'''


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_study_csv(path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def emit_report(r: StudyResult, directory) -> None:
    if r is None or not r.members:
        raise StudyError("empty study result")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "study.csv", STUDY_COLUMNS, ([row[k] for k in STUDY_COLUMNS] for row in r.table()))
    with open(out / "slopes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("quantity", "slope", "intercept", "residual"))
        for key, (a, b, c) in r.slopes.items():
            w.writerow((key, fmt(a), fmt(b), fmt(c)))
    with open(out / "verdict.txt", "w", newline="\n") as fh:
        for c in r.criteria:
            fh.write(c.line() + "\n")
        fh.write(("PASS" if r.passed else "FAIL") + " overall\n")
    for mres in r.members:
        tag = f"ell{fmt(mres.ell)}"
        write_csv(out / f"diagnostics_{tag}.csv", DiagnosticsRecord.CSV_COLUMNS,
                  (rec.row() for rec in mres.diagnostics))
        write_csv(out / f"fluctuation_{tag}.csv", FluctuationRecord.CSV_COLUMNS,
                  (f.row() for f in mres.fluctuations))
    (out / "plot_study.py").write_text(PLOT_SCRIPT)
