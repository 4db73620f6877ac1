"""Shared test helpers: brute-force hull oracle and random payoff generators.

The oracle computes the concave envelope value pointwise as the supremum
over all chords through candidate graph points and over tail rays,
independently of the monotone-chain hull used by the library.
"""
from __future__ import annotations

import numpy as np

from buyhold.payoff import Knot, PiecewiseAffine


def candidate_points(pa: PiecewiseAffine) -> np.ndarray:
    """(n, 2) array of hull candidates: per knot the max of limits and value."""
    pts = []
    for k in pa.knots:
        y = max(k.value, k.right) if k.x == 0.0 else max(k.left, k.value, k.right)
        pts.append((k.x, y))
    return np.array(pts)


def hull_oracle_values(pa: PiecewiseAffine, xs_eval: np.ndarray) -> np.ndarray:
    """O(n^2) envelope values: sup over spanning chords and tail rays."""
    pts = candidate_points(pa)
    px, py = pts[:, 0], pts[:, 1]
    m = pa.tail_slope
    out = np.empty(len(xs_eval))
    for i, x in enumerate(np.asarray(xs_eval, dtype=float)):
        best = -np.inf
        left = px <= x
        right = px >= x
        if left.any():
            best = max(best, np.max(py[left] + m * (x - px[left])))  # tail rays
        xl, yl = px[left], py[left]
        xr, yr = px[right], py[right]
        if len(xl) and len(xr):
            span = xr[None, :] - xl[:, None]
            with np.errstate(invalid="ignore", divide="ignore"):
                chord = (
                    yl[:, None] * (xr[None, :] - x) + yr[None, :] * (x - xl[:, None])
                ) / span
            chord[span == 0.0] = -np.inf
            best = max(best, np.max(chord))
        exact = px == x
        if exact.any():
            best = max(best, np.max(py[exact]))
        out[i] = best
    return out


def random_piecewise_affine(rng: np.random.Generator, max_knots: int = 50) -> PiecewiseAffine:
    """Random nonnegative piecewise-affine payoff, jumps included."""
    n = int(rng.integers(1, max_knots + 1))
    xs = np.unique(np.round(rng.uniform(0.0, 9000.0, size=n), 6))
    xs = xs[xs > 0.0]
    knots = [Knot(0.0, *(float(rng.uniform(0, 100)),) * 3)]
    v0 = knots[0].value
    knots[0] = Knot(0.0, v0, v0, float(rng.uniform(0, 100)) if rng.random() < 0.3 else v0)
    for x in xs:
        v = float(rng.uniform(0, 100))
        if rng.random() < 0.3:  # indicator-style jump
            left = float(rng.uniform(0, 100))
            right = float(rng.uniform(0, 100))
        else:
            left = right = v
        knots.append(Knot(float(x), left, v, right))
    tail = 0.0 if rng.random() < 0.5 else float(rng.uniform(0.0, 2.0))
    return PiecewiseAffine(tuple(knots), tail)


def random_payoff_text(rng: np.random.Generator, depth: int = 0) -> str:
    """Random expression from the payoff grammar, nonnegative by construction."""
    if depth >= 3 or rng.random() < 0.3:
        choice = rng.integers(0, 3)
        if choice == 0:
            return f"{rng.uniform(0, 50):.4f}"
        if choice == 1:
            return "x"
        return f"pos(x-{rng.uniform(0, 150):.4f})"
    choice = rng.integers(0, 5)
    a = random_payoff_text(rng, depth + 1)
    b = random_payoff_text(rng, depth + 1)
    if choice == 0:
        return f"({a}+{b})"
    if choice == 1:
        return f"max({a},{b})"
    if choice == 2:
        return f"min({a},{b})"
    if choice == 3:
        return f"ind_gt(x,{rng.uniform(0.5, 150):.4f})*{rng.uniform(0, 20):.4f}"
    return f"{rng.uniform(0, 5):.4f}*{a if rng.random() < 0.5 else b}"
