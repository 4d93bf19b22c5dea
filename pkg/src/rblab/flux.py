"""Uniformly convex flux functions with their derivatives.

Every model carries the convexity bracket ``c1 <= f''(u) <= c2`` and the
sonic point where ``f'`` vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FluxModel:
    name: str
    f: Scalar
    df: Scalar
    d2f: Scalar
    d3f: Scalar
    c1: float
    c2: float
    u_sonic: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.c1 <= self.c2):
            raise ValueError(f"need 0 < c1 <= c2, got c1={self.c1}, c2={self.c2}")


def _burgers_f(u):
    return 0.5 * u * u


def _identity(u):
    return u * 1.0


def _ones(u):
    return np.ones_like(np.asarray(u, dtype=float))


def _zeros(u):
    return np.zeros_like(np.asarray(u, dtype=float))


def make_burgers() -> FluxModel:
    return FluxModel("burgers", _burgers_f, _identity, _ones, _zeros, 1.0, 1.0, 0.0)


@dataclass(frozen=True)
class _LogCosh:
    # picklable callables, so flux models can cross process boundaries
    a: float
    order: int

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        a = self.a
        if self.order == 0:
            # log cosh(u) = |u| + log1p(exp(-2|u|)) - log 2, overflow-safe
            au = np.abs(u)
            return 0.5 * u * u + a * (au + np.log1p(np.exp(-2.0 * au)) - np.log(2.0))
        if self.order == 1:
            return u + a * np.tanh(u)
        sech2 = 1.0 / np.cosh(np.clip(u, -350.0, 350.0)) ** 2
        if self.order == 2:
            return 1.0 + a * sech2
        return -2.0 * a * sech2 * np.tanh(u)


def make_logcosh(a: float) -> FluxModel:
    """``f(u) = u**2/2 + a log cosh u``; ``c1 = 1``, ``c2 = 1 + a``."""
    a = float(a)
    if not (a > 0.0 and np.isfinite(a)):
        raise ValueError(f"logcosh parameter must be positive, got {a}")
    return FluxModel(
        f"logcosh:{a!r}",
        _LogCosh(a, 0),
        _LogCosh(a, 1),
        _LogCosh(a, 2),
        _LogCosh(a, 3),
        1.0,
        1.0 + a,
        0.0,
    )


def parse_flux(text: str) -> FluxModel:
    """Build a model from ``burgers`` or ``logcosh:<a>``."""
    text = text.strip()
    if text == "burgers":
        return make_burgers()
    if text.startswith("logcosh:"):
        try:
            a = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"malformed flux {text!r}") from exc
        return make_logcosh(a)
    raise ValueError(f"unknown flux {text!r} (expected burgers or logcosh:<a>)")


def inverse_df(m: FluxModel, s: float, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Solve ``f'(u) = s`` on ``[lo, hi]`` by safeguarded Newton iteration.

    Falls back to bisection whenever a Newton iterate leaves the current
    bracket. Raises ``ValueError`` if ``s`` is not in ``[f'(lo), f'(hi)]``.
    """
    dlo, dhi = float(m.df(lo)), float(m.df(hi))
    if not (dlo <= s <= dhi):
        raise ValueError(f"s={s} outside [df(lo), df(hi)] = [{dlo}, {dhi}]")
    if s == dlo:
        return float(lo)
    if s == dhi:
        return float(hi)
    a, b = float(lo), float(hi)
    u = 0.5 * (a + b)
    for _ in range(200):
        g = float(m.df(u)) - s
        if abs(g) <= tol:
            return u
        if g > 0.0:
            b = u
        else:
            a = u
        step = u - g / float(m.d2f(u))
        u = step if a < step < b else 0.5 * (a + b)
        if b - a <= 4.0 * np.finfo(float).eps * max(1.0, abs(u)):
            return u
    return u
