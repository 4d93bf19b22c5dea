"""Snapshot storage and the shared explicit time loop."""

from __future__ import annotations

import hashlib
import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Grid1D, State


class SingularityError(RuntimeError):
    """Raised when the time step collapses below the floor."""


@dataclass
class Trajectory:
    grid: Grid1D
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    # per-step time series, keyed by quantity name; "t" holds the step times
    series: dict[str, list[float]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    singular: bool = False

    def add(self, t: float, u: np.ndarray) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("snapshot times must increase strictly")
        self.times.append(float(t))
        self.states.append(np.array(u, dtype=float))

    def state_at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.states[i]


def config_hash(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
    return h.hexdigest()[:16]


def snapshot_schedule(snapshot_times, t_end: float) -> list[float]:
    ts = sorted({float(t) for t in snapshot_times if 0.0 < float(t) <= t_end})
    if not ts or ts[-1] < t_end:
        ts.append(float(t_end))
    return ts


def march(
    s0: State,
    grid: Grid1D,
    step: Callable[[State, float | None], tuple[State, float]],
    snapshot_times,
    t_end: float,
    land_on_snapshots: bool,
    on_step: Callable[[State], None] | None = None,
    meta: dict | None = None,
    max_steps: int = 10_000_000,
) -> Trajectory:
    """Advance ``s0`` to ``t_end``, storing snapshots.

    ``step(state, dt_max)`` returns the new state and the step taken.
    Snapshots are either hit exactly (``land_on_snapshots``) or linearly
    interpolated between the two steps bracketing them.
    """
    if not t_end > 0.0:
        raise ValueError("t_end must be positive")
    traj = Trajectory(grid, meta=dict(meta or {}))
    traj.add(0.0, s0.u)
    if on_step is not None:
        on_step(s0)
    pending = snapshot_schedule(snapshot_times, t_end)
    s = s0
    nsteps = 0
    wall = _time.perf_counter()
    while pending:
        limit = (pending[0] if land_on_snapshots else t_end) - s.t
        try:
            new, dt = step(s, limit)
        except SingularityError as exc:
            traj.singular = True
            traj.meta["singular_reason"] = str(exc)
            traj.meta["singular_time"] = s.t
            break
        nsteps += 1
        if land_on_snapshots and abs(new.t - pending[0]) <= 1e-12 * max(1.0, pending[0]):
            new.t = pending[0]
        if abs(new.t - t_end) <= 1e-12 * max(1.0, t_end):
            new.t = t_end
        while pending and new.t >= pending[0]:
            tp = pending.pop(0)
            if new.t == tp or dt == 0.0:
                traj.add(tp, new.u)
            else:
                theta = (tp - s.t) / (new.t - s.t)
                traj.add(tp, (1.0 - theta) * s.u + theta * new.u)
        s = new
        if on_step is not None:
            on_step(s)
        if nsteps >= max_steps:
            raise RuntimeError(f"step budget exhausted at t={s.t}")
    traj.meta["steps"] = nsteps
    traj.meta["wall_time"] = _time.perf_counter() - wall
    return traj
