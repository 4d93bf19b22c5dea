"""Inversion of ``Id - ell^2 d^2/dx^2``.

Two independent O(n) routes to the same operator:

* ``tridiagonal`` -- the 3-point stencil solved by the Thomas algorithm
  (Sherman-Morrison correction for the cyclic periodic system);
* ``green`` -- convolution with the exponential kernel
  ``exp(-|x|/ell) / (2 ell)`` realised as a causal plus an anticausal
  first-order recursion, normalised to unit DC gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .flux import FluxModel
from .grid import Grid1D, State, derivative

METHODS = ("tridiagonal", "green")


@numba.njit(cache=True)
def _thomas(lower, diag, upper, rhs):
    # lower[0] and upper[-1] unused
    n = rhs.size
    cp = np.empty(n)
    dp = np.empty(n)
    cp[0] = upper[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / m
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


@numba.njit(cache=True)
def _helmholtz_dirichlet(beta, rhs):
    n = rhs.size
    off = np.full(n, -beta)
    diag = np.full(n, 1.0 + 2.0 * beta)
    return _thomas(off, diag, off, rhs)


@numba.njit(cache=True)
def _helmholtz_periodic(beta, rhs):
    # cyclic tridiagonal system, corners -beta, via Sherman-Morrison
    n = rhs.size
    off = np.full(n, -beta)
    diag = np.full(n, 1.0 + 2.0 * beta)
    gamma = -diag[0]
    diag[0] -= gamma
    diag[n - 1] -= beta * beta / gamma
    x = _thomas(off, diag, off, rhs)
    uvec = np.zeros(n)
    uvec[0] = gamma
    uvec[n - 1] = -beta
    z = _thomas(off, diag, off, uvec)
    fact = (x[0] - beta * x[n - 1] / gamma) / (1.0 + z[0] - beta * z[n - 1] / gamma)
    return x - fact * z


@numba.njit(cache=True)
def _green_sweeps(r, rhs, periodic):
    n = rhs.size
    left = np.empty(n)
    right = np.empty(n)
    l0 = 0.0
    r0 = 0.0
    if periodic:
        # steady state of the recursions over the periodic images
        # left[-1] = sum_{k>=0} r^k rhs[-1-k] over all images, likewise right[n]
        rk = 1.0
        for k in range(n):
            l0 += rk * rhs[n - 1 - k]
            r0 += rk * rhs[k]
            rk *= r
        wrap = 1.0 - rk
        l0 /= wrap
        r0 /= wrap
    acc = l0
    for i in range(n):
        acc = r * acc + rhs[i]
        left[i] = acc
    acc = r0
    for i in range(n - 1, -1, -1):
        acc = r * acc + rhs[i]
        right[i] = acc
    c = (1.0 - r) / (1.0 + r)
    return c * (left + right - rhs)


@dataclass(frozen=True)
class HelmholtzSolver:
    ell: float
    grid: Grid1D
    method: str = "tridiagonal"
    beta: float = field(init=False)
    r: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.ell > 0.0:
            raise ValueError(f"ell must be positive, got {self.ell}")
        if self.method not in METHODS:
            raise ValueError(f"unknown Helmholtz method {self.method!r}")
        dx = self.grid.dx
        object.__setattr__(self, "beta", self.ell**2 / dx**2)
        object.__setattr__(self, "r", float(np.exp(-dx / self.ell)))

    def solve(self, rhs) -> np.ndarray:
        rhs = np.ascontiguousarray(rhs, dtype=float)
        if rhs.shape != (self.grid.n,):
            raise ValueError(f"rhs has shape {rhs.shape}, expected ({self.grid.n},)")
        if not np.all(np.isfinite(rhs)):
            raise FloatingPointError("non-finite Helmholtz right-hand side")
        if self.method == "green":
            return _green_sweeps(self.r, rhs, self.grid.periodic)
        if self.grid.periodic:
            return _helmholtz_periodic(self.beta, rhs)
        return _helmholtz_dirichlet(self.beta, rhs)


def source(u: np.ndarray, m: FluxModel, g: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(q, f''(u) q^2 / 2)`` with ``q`` the centred gradient."""
    q = derivative(u, g)
    return q, 0.5 * m.d2f(u) * q * q


def compute_P(s, m: FluxModel, h: HelmholtzSolver) -> np.ndarray:
    u = s.u if isinstance(s, State) else np.asarray(s, dtype=float)
    _, rhs = source(u, m, h.grid)
    return h.solve(rhs)


def kernel_tail_mass(ell: float, distance: float) -> float:
    """Mass of the exponential kernel beyond ``distance`` on one side."""
    return 0.5 * float(np.exp(-distance / ell))
