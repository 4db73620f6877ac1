"""Optimal-stopping oracle for the envelope price.

The concave envelope admits a stopping representation: the envelope value at
the spot equals the supremum of E[g(S_tau)] over stopping times of the
driftless unit-volatility exponential started at the spot.  This module
verifies that identity numerically with a Bellman fixed-point iteration on a
log-spaced binomial grid,

    V <- max(g, p V(up) + (1-p) V(down)),      p u + (1-p)/u = 1,

iterated to convergence (perpetual stopping).  The fixed point is the grid
least-concave-majorant, an oracle for the envelope module that shares none
of its code path.  ``finite_horizon_value`` prices the n-step horizon-bound
problem instead; it increases toward the perpetual value as the horizon
grows and visualizes the gap between the two formulations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .payoff import PayoffAst, to_piecewise

__all__ = ["StoppingGrid", "StoppingResult", "bellman_envelope", "finite_horizon_value"]


@dataclass(frozen=True)
class StoppingGrid:
    """Log-spaced grid s0 * u^j, j in [-J, J], with its payoff samples.

    Boundary rule: above the top node values continue linearly with the
    payoff tail slope; below the bottom node the value absorbs at g(x_min).
    """

    xs: np.ndarray
    payoff: np.ndarray
    s0: float
    log_step: float
    tail_slope: float

    def __post_init__(self):
        self.xs.flags.writeable = False
        self.payoff.flags.writeable = False


@dataclass(frozen=True)
class StoppingResult:
    value: float
    iterations: int
    residual: float
    converged: bool
    exercise_region: np.ndarray
    grid: StoppingGrid
    values: np.ndarray


@numba.njit(cache=True)
def _bellman_iterate(payoff, p, up_gap, tol, max_iter):  # pragma: no cover
    n = payoff.shape[0]
    v = payoff.copy()
    w = payoff.copy()
    q = 1.0 - p
    it = 0
    delta = math.inf
    while it < max_iter:
        it += 1
        delta = 0.0
        w[0] = payoff[0]  # absorbing lower boundary
        d = abs(w[0] - v[0])
        if d > delta:
            delta = d
        for j in range(1, n - 1):
            c = p * v[j + 1] + q * v[j - 1]
            nv = c if c > payoff[j] else payoff[j]
            w[j] = nv
            d = abs(nv - v[j])
            if d > delta:
                delta = d
        c = p * (v[n - 1] + up_gap) + q * v[n - 2]
        w[n - 1] = c if c > payoff[n - 1] else payoff[n - 1]
        d = abs(w[n - 1] - v[n - 1])
        if d > delta:
            delta = d
        v, w = w, v
        if delta < tol:
            break
    return v, it, delta


def bellman_envelope(
    ast: PayoffAst,
    s0: float,
    j_max: int = 600,
    log_step: float = 0.01,
    tol: float = 1e-10,
    max_iter: int = 20_000_000,
) -> StoppingResult:
    """Iterate the stopping Bellman operator to its fixed point.

    The returned value at s0 approximates the concave envelope there up to
    grid resolution and boundary truncation.  Martingale weights make each
    binomial step conditionally unit-mean; iterates increase monotonically
    from the payoff, and non-convergence within ``max_iter`` is flagged
    rather than raised.
    """
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = to_piecewise(ast)
    if not math.isfinite(g.tail_slope):
        raise ValueError("stopping grid needs a finite payoff tail slope")
    u = math.exp(log_step)
    xs = s0 * np.exp(log_step * np.arange(-j_max, j_max + 1))
    payoff = g(xs)
    p = (1.0 - 1.0 / u) / (u - 1.0 / u)
    up_gap = g.tail_slope * xs[-1] * (u - 1.0)
    values, iterations, residual = _bellman_iterate(
        payoff, p, up_gap, tol, max_iter
    )
    exercise = xs[np.abs(values - payoff) <= 10.0 * tol]
    return StoppingResult(
        value=float(values[j_max]),
        iterations=int(iterations),
        residual=float(residual),
        converged=bool(residual < tol),
        exercise_region=exercise,
        grid=StoppingGrid(
            xs=xs, payoff=payoff, s0=s0, log_step=log_step, tail_slope=g.tail_slope
        ),
        values=values,
    )


def finite_horizon_value(
    ast: PayoffAst, s0: float, n_steps: int, t_horizon: float, sigma: float
) -> float:
    """Value of stopping within [0, T] on an n-step martingale binomial tree.

    Per-step volatility is sigma * sqrt(T / n_steps).  T=0 (or n_steps=0)
    returns g(s0).  The value is a lower bound for the perpetual Bellman
    value and is nondecreasing in T on a fixed-dt tree family (stopping sets
    nest).
    """
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    g = to_piecewise(ast)
    if t_horizon == 0 or n_steps == 0:
        return float(g(s0))
    step = sigma * math.sqrt(t_horizon / n_steps)
    u = math.exp(step)
    p = (1.0 - 1.0 / u) / (u - 1.0 / u)
    j = np.arange(-n_steps, n_steps + 1)
    values = g(s0 * np.exp(step * j))
    for layer in range(n_steps - 1, -1, -1):
        j = np.arange(-layer, layer + 1)
        cont = p * values[2:] + (1.0 - p) * values[:-2]
        values = np.maximum(g(s0 * np.exp(step * j)), cont)
    return float(values[0])
