"""Reference entropy solutions of the inviscid conservation law.

Godunov finite volumes (optionally with explicit viscosity), plus the exact
Riemann solution for convex flux used as an analytic oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flux import FluxModel, inverse_df
from .grid import Grid1D, InitialDatum, State, pad, sample_datum, total_variation
from .trajectory import SingularityError, Trajectory, config_hash, march

DF_FLOOR = 1e-12


def godunov_flux(m: FluxModel, ul, ur):
    """Exact Riemann flux for convex ``f``.

    ``ul <= ur``: minimum of ``f`` over ``[ul, ur]``;
    ``ul > ur``: ``max(f(ul), f(ur))``.
    """
    ul = np.asarray(ul, dtype=float)
    ur = np.asarray(ur, dtype=float)
    rare = m.f(np.clip(m.u_sonic, ul, np.maximum(ul, ur)))
    shock = np.maximum(m.f(ul), m.f(ur))
    return np.where(ul <= ur, rare, shock)


def llf_flux(m: FluxModel, ul, ur):
    """Local Lax-Friedrichs (Rusanov) flux."""
    alpha = np.maximum(np.abs(m.df(ul)), np.abs(m.df(ur)))
    return 0.5 * (m.f(ul) + m.f(ur)) - 0.5 * alpha * (ur - ul)


NUMERICAL_FLUXES = {"godunov": godunov_flux, "llf": llf_flux}


@dataclass
class EntropyRunConfig:
    flux: FluxModel
    grid: Grid1D
    datum: InitialDatum | None
    t_end: float
    cfl: float = 0.9
    viscosity: float = 0.0
    snapshot_times: list[float] = field(default_factory=list)
    numerical_flux: str = "godunov"
    # overrides sampling of ``datum`` (Riemann data, restricted states, ...)
    initial: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.viscosity < 0.0:
            raise ValueError("viscosity must be non-negative")
        if self.numerical_flux not in NUMERICAL_FLUXES:
            raise ValueError(f"unknown numerical flux {self.numerical_flux!r}")
        if self.datum is None and self.initial is None:
            raise ValueError("need a datum or an explicit initial state")

    def initial_state(self) -> State:
        if self.initial is not None:
            u0 = np.asarray(self.initial, dtype=float)
            if u0.shape != (self.grid.n,):
                raise ValueError("initial state does not match the grid")
            return State(u0.copy(), 0.0)
        return sample_datum(self.datum, self.grid)


def stable_dt(cfg: EntropyRunConfig, u: np.ndarray) -> float:
    """Explicit step: advective CFL and the parabolic limit share one budget.

    ``a dt/dx + 2 eps dt/dx^2 <= cfl`` implies both ``dt <= cfl dx/a`` and
    ``dt <= dx^2/(2 eps)`` and keeps the Godunov update a convex combination.
    """
    dx = cfg.grid.dx
    a = float(np.max(np.abs(cfg.flux.df(u)), initial=0.0))
    if a < DF_FLOOR:
        if np.any(u != cfg.flux.u_sonic):
            raise SingularityError("characteristic speeds vanish on nonzero data")
        a = DF_FLOOR
    return cfg.cfl / (a / dx + 2.0 * cfg.viscosity / dx**2)


def entropy_increment(cfg: EntropyRunConfig, u: np.ndarray, dt: float) -> np.ndarray:
    g = cfg.grid
    up = pad(u, g)
    F = NUMERICAL_FLUXES[cfg.numerical_flux](cfg.flux, up[:-1], up[1:])
    du = -(dt / g.dx) * (F[1:] - F[:-1])
    if cfg.viscosity > 0.0:
        du += cfg.viscosity * dt / g.dx**2 * (up[2:] - 2.0 * u + up[:-2])
    return du


def step_entropy(cfg: EntropyRunConfig, s: State, dt_max: float | None = None) -> State:
    dt = stable_dt(cfg, s.u)
    if dt_max is not None:
        dt = min(dt, dt_max)
    return State(s.u + entropy_increment(cfg, s.u, dt), s.t + dt)


def run_entropy(cfg: EntropyRunConfig) -> Trajectory:
    """Integrate to ``t_end`` and record TV / forward slope after every step."""
    s0 = cfg.initial_state()
    g = cfg.grid

    def step(s, limit):
        new = step_entropy(cfg, s, limit)
        return new, new.t - s.t

    series: dict[str, list[float]] = {}

    def on_step(s):
        for key, v in (("t", s.t), ("tv", total_variation(s.u)),
                       ("sup_fwd_slope", float(np.max(np.diff(s.u), initial=-np.inf)) / g.dx),
                       ("mass", g.dx * float(s.u.sum()))):
            series.setdefault(key, []).append(v)

    meta = {"kind": "entropy", "hash": config_hash(cfg.flux.name, g, cfg.datum and cfg.datum.spec(),
                                                   cfg.t_end, cfg.cfl, cfg.viscosity,
                                                   cfg.numerical_flux)}
    traj = march(s0, g, step, cfg.snapshot_times, cfg.t_end, land_on_snapshots=False,
                 on_step=on_step, meta=meta)
    traj.series = series
    return traj


def analytic_riemann_eval(m: FluxModel, ul: float, ur: float, x, t: float):
    """Entropy solution of the Riemann problem ``(ul, ur)`` at ``(x, t)``."""
    if not t > 0.0:
        raise ValueError("t must be positive")
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if ul == ur:
        out = np.full_like(x, ul)
    elif ul > ur:
        speed = (float(m.f(ul)) - float(m.f(ur))) / (ul - ur)
        out = np.where(x < speed * t, ul, ur).astype(float)
    else:
        lo, hi = float(m.df(ul)), float(m.df(ur))
        xi = x / t
        out = np.where(xi <= lo, ul, ur).astype(float)
        fan = (xi > lo) & (xi < hi)
        out[fan] = [inverse_df(m, v, ul, ur) for v in xi[fan]]
    return float(out[0]) if scalar else out
