"""Concave envelope pricing: least concave majorant, hedge, regularization.

The buy-and-hold price of a Markovian claim g(S_T) in a fully incomplete
market is the concave envelope of g at the spot, and the optimal hedge ratio
is the envelope's right derivative there.  Everything here is exact on the
piecewise-affine payoff class: the envelope is an upper convex hull over the
payoff's knots (both one-sided limits and point values are hull candidates)
with the asymptote treated as a ray of slope ``tail_slope`` from the last
knot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np

from .payoff import (
    Knot,
    PayoffAst,
    PiecewiseAffine,
    _pa_const,
    _pw_extremum,
    _pw_sub,
    to_piecewise,
)

__all__ = [
    "ConcaveEnvelope", "HedgePair", "RegularizedPayoff", "MarginReport",
    "ContactInterval", "concave_envelope", "envelope_from_table",
    "right_derivative", "left_derivative", "buy_and_hold_price",
    "hedge_dominates", "lipschitz_regularize", "contact_set",
    "write_envelope_csv",
]


@dataclass(frozen=True)
class ConcaveEnvelope:
    """Piecewise-linear concave function on [0, inf).

    ``xs``/``ys`` are the hull vertices (xs[0] == 0), affine in between,
    ray of slope ``tail_slope`` after the last vertex.  ``finite=False``
    flags the infinite-envelope sentinel of a superlinear payoff; no other
    field is meaningful then.
    """

    xs: tuple[float, ...]
    ys: tuple[float, ...]
    tail_slope: float
    finite: bool = True

    def __post_init__(self):
        if not self.finite:
            return
        if not self.xs or self.xs[0] != 0.0:
            raise ValueError("envelope needs a vertex at x=0")
        slopes = self.slopes
        if np.any(slopes < 0.0) or self.tail_slope < 0.0:
            raise ValueError("envelope of a nonnegative payoff must be nondecreasing")
        run = np.concatenate([slopes, [self.tail_slope]])
        if np.any(np.diff(run) > 0.0):
            raise ValueError("envelope slopes must be non-increasing")

    @cached_property
    def slopes(self) -> np.ndarray:
        xs = np.array(self.xs)
        ys = np.array(self.ys)
        return (ys[1:] - ys[:-1]) / (xs[1:] - xs[:-1])

    def __call__(self, x):
        if not self.finite:
            xv = np.asarray(x, dtype=float)
            return math.inf if xv.ndim == 0 else np.full(xv.shape, math.inf)
        xs = np.array(self.xs)
        ys = np.array(self.ys)
        xv = np.asarray(x, dtype=float)
        scalar = xv.ndim == 0
        xv = np.atleast_1d(xv)
        if np.any(xv < 0):
            raise ValueError("envelope is defined on x >= 0")
        idx = np.searchsorted(xs, xv, side="right") - 1
        idx = np.clip(idx, 0, len(xs) - 1)
        slope = np.where(
            idx < len(xs) - 1,
            np.concatenate([self.slopes, [self.tail_slope]])[idx],
            self.tail_slope,
        )
        out = ys[idx] + slope * (xv - xs[idx])
        return float(out[0]) if scalar else out

    def to_piecewise(self) -> PiecewiseAffine:
        knots = tuple(Knot(x, y, y, y) for x, y in zip(self.xs, self.ys))
        return PiecewiseAffine(knots, self.tail_slope)


@dataclass(frozen=True)
class HedgePair:
    """Buy-and-hold super-replication price and hedge ratio at ``s0``.

    ``price + delta * (x - s0) >= g(x)`` for every x >= 0.  For an infinite
    envelope ``price`` is inf and ``delta`` is NaN (undefined).
    """

    price: float
    delta: float
    s0: float

    @property
    def delta_defined(self) -> bool:
        return not math.isnan(self.delta)


@dataclass(frozen=True)
class RegularizedPayoff:
    """n-Lipschitz, n-bounded minorant min(inf_y{g(y) + n|x-y|}, n)."""

    n: int
    func: PiecewiseAffine


@dataclass(frozen=True)
class MarginReport:
    """Result of checking price + delta*(x - s0) >= g(x) on a finite set."""

    min_margin: float
    argmin: float
    tail_ok: bool
    n_points: int

    @property
    def dominates(self) -> bool:
        return self.min_margin >= 0.0 and self.tail_ok


@dataclass(frozen=True)
class ContactInterval:
    """Closure of a maximal interval where envelope - payoff <= tol.

    ``lo_attained``/``hi_attained`` record whether the inequality holds at the
    endpoint itself; an unattained endpoint marks a payoff jump whose limit,
    not value, touches the envelope.  ``hi`` may be inf.
    """

    lo: float
    hi: float
    lo_attained: bool = True
    hi_attained: bool = True

    def contains(self, x) -> np.ndarray:
        return (np.asarray(x) >= self.lo) & (np.asarray(x) <= self.hi)


# ---------------------------------------------------------------------------
# Hull construction
# ---------------------------------------------------------------------------

def _upper_hull(points: list[tuple[float, float]], tail_slope: float) -> ConcaveEnvelope:
    """Monotone-chain upper hull with the tail treated as a ray.

    ``points`` need not be deduplicated; at equal x the highest y wins.  The
    final pops enforce that the closing segment can continue into the tail
    ray without breaking concavity (a last slope below the ray slope means
    the ray from the previous vertex already dominates the vertex).
    """
    best: dict[float, float] = {}
    for x, y in points:
        x, y = float(x), float(y)
        if x not in best or y > best[x]:
            best[x] = y
    cand = sorted(best.items())
    hull: list[tuple[float, float]] = []
    for x, y in cand:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # keep strictly decreasing slopes; pop collinear middles too
            if (y2 - y1) * (x - x2) <= (y - y2) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append((x, y))
    while len(hull) >= 2:
        (x1, y1), (x2, y2) = hull[-2], hull[-1]
        if (y2 - y1) <= tail_slope * (x2 - x1):
            hull.pop()
        else:
            break
    xs, ys = zip(*hull)
    return ConcaveEnvelope(xs, ys, tail_slope)


def concave_envelope(g: PiecewiseAffine) -> ConcaveEnvelope:
    """Least concave majorant of g on [0, inf).

    Hull candidates are all one-sided limits and point values at the knots
    (so indicator jumps and isolated spikes are majorized); the value at 0 is
    the larger of g(0) and the right limit there.  A superlinear tail
    (``tail_slope == inf``) yields the infinite sentinel, never an exception.
    """
    if not math.isfinite(g.tail_slope):
        return ConcaveEnvelope((), (), math.inf, finite=False)
    if g.min_point()[0] < 0.0:
        raise ValueError("payoff must be nonnegative")
    points: list[tuple[float, float]] = []
    for k in g.knots:
        if k.x == 0.0:
            points.append((0.0, max(k.value, k.right)))
        else:
            points.append((k.x, max(k.left, k.value, k.right)))
    return _upper_hull(points, g.tail_slope)


def envelope_from_table(
    samples: Sequence[tuple[float, float]], declared_tail_slope: float
) -> ConcaveEnvelope:
    """Hull of a sampled payoff plus the declared tail ray.

    This approximates the true envelope from below-sampled g: it majorizes
    the samples, not unseen values between them.  A sample at x=0 is optional;
    nonnegativity pins the implied candidate (0, 0) otherwise.
    """
    if not math.isfinite(declared_tail_slope) or declared_tail_slope < 0:
        raise ValueError("declared tail slope must be finite and nonnegative")
    xs = [x for x, _ in samples]
    if not samples:
        raise ValueError("need at least one sample")
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("samples must be sorted with strictly increasing x")
    if xs[0] < 0 or any(v < 0 for _, v in samples):
        raise ValueError("samples must have x >= 0 and values >= 0")
    points = [(float(x), float(v)) for x, v in samples]
    if points[0][0] > 0.0:
        points.insert(0, (0.0, 0.0))
    return _upper_hull(points, declared_tail_slope)


def right_derivative(env: ConcaveEnvelope, s: float) -> float:
    """Slope of the envelope segment immediately to the right of s."""
    if not env.finite:
        raise ValueError("right derivative of an infinite envelope is undefined")
    if s < 0:
        raise ValueError("s must be >= 0")
    xs = env.xs
    if s >= xs[-1]:
        return env.tail_slope
    i = int(np.searchsorted(np.array(xs), s, side="right")) - 1
    return float(env.slopes[max(i, 0)])


def left_derivative(env: ConcaveEnvelope, s: float) -> float:
    """Slope immediately to the left of s (inf at s=0: boundary supergradient)."""
    if not env.finite:
        raise ValueError("left derivative of an infinite envelope is undefined")
    if s <= 0:
        return math.inf if s == 0 else float("nan")
    xs = env.xs
    if s > xs[-1]:
        return env.tail_slope
    i = int(np.searchsorted(np.array(xs), s, side="left")) - 1
    if i >= len(env.slopes):
        return env.tail_slope
    return float(env.slopes[max(i, 0)])


def buy_and_hold_price(ast: PayoffAst, s0: float) -> HedgePair:
    """Super-replication price and optimal buy-and-hold hedge at the spot.

    price = envelope(s0), delta = right derivative of the envelope at s0.
    A superlinear payoff prices to inf with an undefined (NaN) delta.
    """
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    env = concave_envelope(to_piecewise(ast))
    if not env.finite:
        return HedgePair(math.inf, math.nan, s0)
    return HedgePair(float(env(s0)), right_derivative(env, s0), s0)


def hedge_dominates(ast: PayoffAst, hedge: HedgePair, grid: Iterable[float]) -> MarginReport:
    """Worst margin of price + delta*(x - s0) - g(x) over grid and knots.

    At payoff knots the local supremum of g (both one-sided limits and the
    point value) is used, so a zero minimum certifies domination up to the
    grid resolution; the tail check compares delta against g's tail slope.
    A failing hedge yields a negative margin, never an exception.
    """
    if not math.isfinite(hedge.price) or math.isnan(hedge.delta):
        raise ValueError("hedge must be finite")
    g = to_piecewise(ast)
    pts = list(dict.fromkeys(list(grid)))
    if not pts:
        raise ValueError("grid must be nonempty")
    margins = []
    for x in pts:
        margins.append((hedge.price + hedge.delta * (x - hedge.s0) - g(x), x))
    for k in g.knots:
        local_sup = max(k.left, k.value, k.right) if k.x > 0 else max(k.value, k.right)
        margins.append((hedge.price + hedge.delta * (k.x - hedge.s0) - local_sup, k.x))
    worst, arg = min(margins)
    return MarginReport(
        min_margin=float(worst),
        argmin=float(arg),
        tail_ok=hedge.delta >= g.tail_slope,
        n_points=len(margins),
    )


def lipschitz_regularize(ast: PayoffAst, n: int) -> RegularizedPayoff:
    """Largest n-Lipschitz minorant of g capped at n, in closed form.

    The inf-convolution inf_y{g(y) + n|x-y|} of a piecewise-affine g equals
    the pointwise min of g with the cones c_i + n|x - x_i| planted at every
    knot, where c_i is the local infimum of g there (one-sided limits smooth
    the indicator jumps); capping at n then bounds it.  The sequence
    increases pointwise to g as n grows.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    g = to_piecewise(ast)
    result = g
    for k in g.knots:
        c = min(k.value, k.right) if k.x == 0.0 else min(k.left, k.value, k.right)
        if k.x == 0.0:
            cone = PiecewiseAffine((Knot(0.0, c, c, c),), float(n))
        else:
            v0 = c + n * k.x
            cone = PiecewiseAffine(
                (Knot(0.0, v0, v0, v0), Knot(k.x, c, c, c)), float(n)
            )
        result = _pw_extremum(result, cone, take_max=False)
    result = _pw_extremum(result, _pa_const(float(n)), take_max=False)
    return RegularizedPayoff(n=n, func=result)


def contact_set(ast: PayoffAst, env: ConcaveEnvelope, tol: float = 0.0) -> list[ContactInterval]:
    """Maximal intervals where envelope - payoff <= tol (exact for tol = 0).

    Where the payoff jumps, the set can be open at an endpoint; the closure
    is reported with ``lo_attained``/``hi_attained`` flagging such points.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if not env.finite:
        raise ValueError("contact set of an infinite envelope is undefined")
    g = to_piecewise(ast)
    d = _pw_sub(env.to_piecewise(), g)

    # pieces: (lo, hi, lo_att, hi_att) with d <= tol.  Knot points carry the
    # exact value; open-segment and tail pieces leave their endpoints
    # unattained (the knot piece, if satisfied, merges in and attains them).
    pieces: list[tuple[float, float, bool, bool]] = []
    ks = d.knots
    for k in ks:
        if k.value <= tol:
            pieces.append((k.x, k.x, True, True))
    slopes = d.segment_slopes if len(ks) > 1 else np.empty(0)
    for i in range(len(ks) - 1):
        x1, x2 = ks[i].x, ks[i + 1].x
        lo, hi = _affine_le_tol(x1, x2, ks[i].right, ks[i + 1].left, float(slopes[i]), tol)
        if lo is None or lo > hi:
            continue
        if lo == hi and not (x1 < lo < x2):
            continue  # endpoint-only touch; the knot piece covers it if attained
        pieces.append((lo, hi, lo > x1, hi < x2))
    # tail ray
    x1 = ks[-1].x
    v1 = ks[-1].right
    m = d.tail_slope
    if m <= 0:
        if v1 <= tol:
            pieces.append((x1, math.inf, False, True))
        elif m < 0:
            pieces.append((x1 + (tol - v1) / m, math.inf, True, True))
    elif v1 <= tol:
        xc = x1 + (tol - v1) / m
        if xc > x1:
            pieces.append((x1, xc, False, True))

    pieces.sort()
    merged: list[ContactInterval] = []
    for lo, hi, la, ha in pieces:
        if merged:
            prev = merged[-1]
            if lo < prev.hi or (lo == prev.hi and (prev.hi_attained or la)):
                if hi > prev.hi:
                    new_hi, new_ha = hi, ha
                elif hi == prev.hi:
                    new_hi, new_ha = hi, ha or prev.hi_attained
                else:
                    new_hi, new_ha = prev.hi, prev.hi_attained
                merged[-1] = ContactInterval(prev.lo, new_hi, prev.lo_attained, new_ha)
                continue
        merged.append(ContactInterval(lo, hi, la, ha))
    return merged


def _affine_le_tol(x1, x2, v1, v2, slope, tol):
    """Sub-interval of the open segment (x1, x2) where the affine piece <= tol."""
    if v1 <= tol and v2 <= tol:
        return x1, x2
    if v1 > tol and v2 > tol:
        return None, None
    xc = x1 + (tol - v1) / slope
    if v1 <= tol:
        return x1, min(xc, x2)
    return max(xc, x1), x2


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def write_envelope_csv(env: ConcaveEnvelope, out: IO[str]) -> None:
    """Rows x,value,slope_right per vertex, then an x=inf row with the tail slope."""
    out.write("x,value,slope_right\n")
    if not env.finite:
        out.write("inf,inf,inf\n")
        return
    all_slopes = [float(s) for s in env.slopes] + [env.tail_slope]
    for (x, y), s in zip(zip(env.xs, env.ys), all_slopes):
        out.write(f"{x!r},{y!r},{s!r}\n")
    out.write(f"inf,,{env.tail_slope!r}\n")
