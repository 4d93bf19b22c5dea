"""Method-of-lines solver for the nonlocal regularized conservation law

    u_t + f(u)_x + ell^2 P_x = eps u_xx,    P - ell^2 P_xx = f''(u) u_x^2 / 2.

Local Lax-Friedrichs fluxes (optionally on minmod-limited MUSCL states),
a Helmholtz solve for P, centred ``P_x``, and SSP-RK3 in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import record
from .entropy import llf_flux
from .flux import FluxModel
from .grid import Grid1D, InitialDatum, State, pad, sample_datum
from .helmholtz import HelmholtzSolver
from .trajectory import SingularityError, Trajectory, config_hash, march

DT_FLOOR = 1e-12
RECONSTRUCTIONS = ("muscl", "first")


@dataclass(frozen=True)
class ViscosityPolicy:
    """``none``, ``fixed`` (``eps = value``) or ``mesh`` (``eps = value * dx``)."""

    kind: str = "mesh"
    value: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "fixed", "mesh"):
            raise ValueError(f"unknown viscosity policy {self.kind!r}")
        if self.value < 0:
            raise ValueError("viscosity parameter must be non-negative")

    def epsilon(self, dx: float) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "fixed":
            return self.value
        return self.value * dx

    @classmethod
    def parse(cls, text: str) -> "ViscosityPolicy":
        text = text.strip()
        if text == "none":
            return cls("none", 0.0)
        kind, _, val = text.partition(":")
        if kind not in ("fixed", "mesh") or not val:
            raise ValueError(f"malformed viscosity policy {text!r}")
        return cls(kind, float(val))

    def __str__(self) -> str:
        return "none" if self.kind == "none" else f"{self.kind}:{self.value!r}"


@dataclass
class RBRunConfig:
    flux: FluxModel
    grid: Grid1D
    datum: InitialDatum | None
    ell: float
    t_end: float
    viscosity: ViscosityPolicy = field(default_factory=ViscosityPolicy)
    cfl: float = 0.5
    snapshot_times: list[float] = field(default_factory=list)
    reconstruction: str = "muscl"
    helmholtz: str = "tridiagonal"
    initial: np.ndarray | None = None
    # record diagnostics after every step (otherwise only at snapshots)
    per_step_diagnostics: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.ell <= 1.0:
            raise ValueError(f"ell must lie in (0, 1], got {self.ell}")
        if self.ell < 4.0 * self.grid.dx * (1 - 1e-12):
            raise ValueError(f"ell={self.ell} under-resolved: need ell >= 4 dx = {4 * self.grid.dx}")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.reconstruction not in RECONSTRUCTIONS:
            raise ValueError(f"unknown reconstruction {self.reconstruction!r}")
        if self.datum is None and self.initial is None:
            raise ValueError("need a datum or an explicit initial state")

    @property
    def epsilon(self) -> float:
        return self.viscosity.epsilon(self.grid.dx)

    def solver(self) -> HelmholtzSolver:
        return HelmholtzSolver(self.ell, self.grid, self.helmholtz)

    def initial_state(self) -> State:
        if self.initial is not None:
            return State(np.array(self.initial, dtype=float), 0.0)
        return sample_datum(self.datum, self.grid)

    def hash(self) -> str:
        return config_hash(self.flux.name, self.grid, self.datum and self.datum.spec(), self.ell,
                           self.t_end, str(self.viscosity), self.cfl, self.reconstruction,
                           self.helmholtz, tuple(self.snapshot_times))


def _minmod(a, b):
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def face_states(u: np.ndarray, g: Grid1D, reconstruction: str) -> tuple[np.ndarray, np.ndarray]:
    """Left/right states at the ``n + 1`` faces, boundary faces included."""
    if reconstruction == "first":
        up = pad(u, g)
        return up[:-1], up[1:]
    up = pad(u, g, 2)
    d = np.diff(up)
    slope = _minmod(d[:-1], d[1:])  # cells -1 .. n
    centre = up[1:-1]
    left = centre[:-1] + 0.5 * slope[:-1]
    right = centre[1:] - 0.5 * slope[1:]
    return left, right


def rb_rhs(s, cfg: RBRunConfig, h: HelmholtzSolver | None = None,
           P: np.ndarray | None = None) -> np.ndarray:
    """Semi-discrete ``du/dt``."""
    u = np.asarray(getattr(s, "u", s), dtype=float)
    g = cfg.grid
    m = cfg.flux
    dx = g.dx
    ul, ur = face_states(u, g, cfg.reconstruction)
    F = llf_flux(m, ul, ur)
    rhs = -(F[1:] - F[:-1]) / dx
    if P is None:
        h = h or cfg.solver()
        up = pad(u, g)
        q = (up[2:] - up[:-2]) / (2.0 * dx)
        P = h.solve(0.5 * m.d2f(u) * q * q)
    Pp = np.concatenate((P[-1:], P, P[:1])) if g.periodic else np.concatenate(([0.0], P, [0.0]))
    rhs -= cfg.ell**2 * (Pp[2:] - Pp[:-2]) / (2.0 * dx)
    eps = cfg.epsilon
    if eps > 0.0:
        up = pad(u, g)
        rhs += eps * (up[2:] - 2.0 * u + up[:-2]) / dx**2
    return rhs


def stable_dt(cfg: RBRunConfig, u: np.ndarray) -> float:
    """Advective, parabolic and nonlocal limits added into one CFL budget."""
    g = cfg.grid
    m = cfg.flux
    dx = g.dx
    a = float(np.max(np.abs(m.df(u)), initial=0.0))
    up = pad(u, g)
    qmax = float(np.max(np.abs(up[2:] - up[:-2]), initial=0.0)) / (2.0 * dx)
    nonlocal_rate = cfg.ell * np.sqrt(cfg.flux.c2) * qmax / dx
    rate = a / dx + 2.0 * cfg.epsilon / dx**2 + nonlocal_rate
    if rate == 0.0:
        return np.inf
    return cfg.cfl / rate


def step_rb(cfg: RBRunConfig, s: State, dt_max: float | None = None,
            h: HelmholtzSolver | None = None) -> State:
    """One SSP-RK3 (Shu-Osher) step."""
    h = h or cfg.solver()
    dt = stable_dt(cfg, s.u)
    if dt_max is not None:
        dt = min(dt, dt_max)
    if dt < DT_FLOOR:
        raise SingularityError(f"time step {dt:.3e} collapsed at t={s.t:.6g}")
    u = s.u
    u1 = u + dt * rb_rhs(u, cfg, h)
    u2 = 0.75 * u + 0.25 * (u1 + dt * rb_rhs(u1, cfg, h))
    u3 = (u + 2.0 * (u2 + dt * rb_rhs(u2, cfg, h))) / 3.0
    if not np.all(np.isfinite(u3)):
        raise SingularityError(f"non-finite state after step at t={s.t:.6g}")
    return State(u3, s.t + dt)


def run_rb(cfg: RBRunConfig) -> Trajectory:
    """Integrate to ``t_end``; snapshots are hit exactly.

    The diagnostics time series (``Trajectory.series``) is filled after every
    step, or only at snapshots when ``per_step_diagnostics`` is off.
    """
    h = cfg.solver()
    s0 = cfg.initial_state()
    series: dict[str, list[float]] = {}
    snaps = set()

    def push(s):
        r = record(s.u, cfg.flux, cfg.ell, h, s.t)
        for key, v in zip(("t", "energy", "tv", "sup_fwd_slope", "linf", "l2P_int",
                           "l2qP_int", "boundary_residual", "l2q2"),
                          (r.t, r.energy, r.tv, r.sup_fwd_slope, r.linf, r.l2P_int,
                           r.l2qP_int, r.boundary_residual, r.l2q2)):
            series.setdefault(key, []).append(v)

    def step(s, limit):
        new = step_rb(cfg, s, limit, h)
        return new, new.t - s.t

    def on_step(s):
        if cfg.per_step_diagnostics or s.t == 0.0 or s.t in snaps:
            push(s)

    snaps.update(float(t) for t in cfg.snapshot_times)
    snaps.add(float(cfg.t_end))
    meta = {"kind": "rb", "hash": cfg.hash(), "epsilon": cfg.epsilon}
    traj = march(s0, cfg.grid, step, cfg.snapshot_times, cfg.t_end, land_on_snapshots=True,
                 on_step=on_step, meta=meta)
    traj.series = series
    return traj
