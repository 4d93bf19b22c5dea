"""Measured functionals and the closed-form bounds they are compared with."""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from .flux import FluxModel
from .grid import Grid1D, lp_norm, prefix_integral, total_variation
from .helmholtz import HelmholtzSolver, source
from .trajectory import Trajectory

P_FLOOR = -1e-12


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy: float
    tv: float
    sup_fwd_slope: float
    linf: float
    l2P_int: float
    l2qP_int: float
    boundary_residual: float
    # ell^2 ||q||_{L^2}^2, the bracket that integrates to ell^2 P
    l2q2: float = 0.0

    CSV_COLUMNS = ("t", "energy", "tv", "sup_fwd_slope", "linf",
                   "l2P_int", "l2qP_int", "boundary_residual")

    def row(self) -> tuple[float, ...]:
        return astuple(self)[:len(self.CSV_COLUMNS)]


def record(u, m: FluxModel, ell: float, h: HelmholtzSolver, t: float = 0.0) -> DiagnosticsRecord:
    g = h.grid
    u = np.asarray(getattr(u, "u", u), dtype=float)
    t = float(getattr(u, "t", t))
    q, rhs = source(u, m, g)
    P = h.solve(rhs)
    dx = g.dx
    l2 = ell * ell
    q2 = dx * float(np.dot(q, q))
    if g.periodic:
        residual = 0.0
    else:
        residual = max(abs(u[0] - g.left_value), abs(u[-1] - g.right_value))
    slopes = np.diff(u) / dx
    return DiagnosticsRecord(
        t=t,
        energy=0.5 * dx * float(np.dot(u, u)) + 0.5 * l2 * q2,
        tv=total_variation(u),
        sup_fwd_slope=float(slopes.max(initial=0.0)),
        linf=float(np.abs(u).max(initial=0.0)),
        l2P_int=l2 * dx * float(P.sum()),
        l2qP_int=l2 * dx * float(np.dot(np.abs(q), P)),
        boundary_residual=float(residual),
        l2q2=l2 * q2,
    )


def oleinik_bound(t: float, c1: float, M: float) -> float:
    """One-sided slope bound ``1 / (c1 t / 2 + 1/M)`` for the regularized flow."""
    if t < 0 or not M > 0:
        raise ValueError("need t >= 0 and M > 0")
    return 1.0 / (0.5 * c1 * t + 1.0 / M)


def oleinik_bound_entropy(t: float, c1: float, M: float) -> float:
    """The sharper bound ``1 / (c1 t + 1/M)`` of the viscous conservation law."""
    if t < 0 or not M > 0:
        raise ValueError("need t >= 0 and M > 0")
    return 1.0 / (c1 * t + 1.0 / M)


def tv_bound(t: float, c1: float, c2: float, M: float, tv0: float) -> float:
    """``tv0 (c1 M t / 2 + 1) ** (2 c2 / c1)``."""
    if t < 0:
        raise ValueError("need t >= 0")
    return tv0 * (0.5 * c1 * M * t + 1.0) ** (2.0 * c2 / c1)


def slope_allowance(bound: float, n: int, rel: float = 0.05) -> float:
    """Discrete tolerance used for all one-sided slope checks."""
    return bound * (1.0 + rel) + 2.0 / np.sqrt(n)


@dataclass(frozen=True)
class FluctuationRecord:
    t: float
    zeta_l1: float
    l1_err: float
    l2_err: float
    l4_err: float

    CSV_COLUMNS = ("t", "zeta_l1", "l1_err", "l2_err", "l4_err")

    @property
    def lp_err(self) -> dict[float, float]:
        return {1: self.l1_err, 2: self.l2_err, 4: self.l4_err}

    def row(self) -> tuple[float, ...]:
        return astuple(self)


def fluctuation_at(t: float, u_rb: np.ndarray, u_ref: np.ndarray, g: Grid1D) -> FluctuationRecord:
    w = np.asarray(u_rb, dtype=float) - np.asarray(u_ref, dtype=float)
    zeta = prefix_integral(w, g)
    return FluctuationRecord(t, lp_norm(zeta, g, 1), lp_norm(w, g, 1),
                             lp_norm(w, g, 2), lp_norm(w, g, 4))


def fluctuation(traj_rb: Trajectory, traj_ref: Trajectory, g: Grid1D) -> list[FluctuationRecord]:
    """``w = u_rb - u_ref`` and its antiderivative at every shared snapshot.

    ``traj_ref`` must already live on ``g`` (restricted from a finer grid).
    """
    if len(traj_rb.times) != len(traj_ref.times) or not np.allclose(
            traj_rb.times, traj_ref.times, rtol=0, atol=1e-12):
        raise ValueError("trajectories have different snapshot times")
    out = []
    for t, a, b in zip(traj_rb.times, traj_rb.states, traj_ref.states):
        if a.shape != (g.n,) or b.shape != (g.n,):
            raise ValueError("snapshot does not live on the comparison grid")
        out.append(fluctuation_at(t, a, b, g))
    return out


def interpolation_constant(fr: FluctuationRecord, tv_rb: float, tv_ref: float) -> float:
    """Ratio ``||w||_1 / sqrt(||zeta||_1 (TV_rb + TV_ref))``."""
    denom = np.sqrt(fr.zeta_l1 * (tv_rb + tv_ref))
    return float(fr.l1_err / denom) if denom > 0 else 0.0

