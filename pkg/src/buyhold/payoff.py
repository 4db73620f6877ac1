"""Payoff expression language: parsing, evaluation, exact piecewise-affine form.

The grammar is deliberately small so that every payoff it can express is
piecewise affine on [0, inf) with finitely many breakpoints (jump
discontinuities allowed at indicator levels).  That keeps knots, one-sided
limits and the asymptotic slope exactly computable, which the envelope
module relies on.

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := NUMBER | 'x' | '(' expr ')'
            | 'max(' expr ',' expr ')' | 'min(' expr ',' expr ')'
            | 'pos(' expr ')'
            | 'ind_gt(' expr ',' NUMBER ')' | 'ind_ge(' expr ',' NUMBER ')'

Whitespace is ignored; numbers are plain decimal literals; error positions
are 1-based character offsets.  Products are restricted: every '*' needs at
least one piecewise-constant factor (x-free constants, indicators and their
combinations), otherwise the product would leave the piecewise-affine class
("x*x" is rejected).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "Const", "Var", "Add", "Sub", "Mul", "Max", "Min", "Pos", "IndGt", "IndGe",
    "PayoffAst", "Knot", "PiecewiseAffine",
    "PayoffError", "PayoffSyntaxError", "NonAffineProductError", "NegativePayoffError",
    "parse_payoff", "eval_payoff", "to_piecewise", "lsc_normalize",
]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class PayoffError(ValueError):
    """Base class for payoff DSL errors."""


class PayoffSyntaxError(PayoffError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position  # 1-based character offset


class NonAffineProductError(PayoffSyntaxError):
    def __init__(self, position: int):
        super().__init__(
            "non-affine product: each '*' needs a piecewise-constant factor", position
        )


class NegativePayoffError(PayoffError):
    """Payoff takes negative values somewhere on [0, inf).

    For payoffs bounded from below, ``suggested_shift`` is the cash amount c
    such that g + c is nonnegative; prices are cash invariant, so the price
    of g is the price of g + c minus c.  Re-parse with ``auto_shift=True`` to
    apply the shift automatically.
    """

    def __init__(self, min_value: float, where: float):
        self.min_value = min_value
        self.where = where
        self.suggested_shift = -min_value if math.isfinite(min_value) else math.inf
        if math.isfinite(min_value):
            msg = (
                f"payoff is negative (minimum {min_value:g} at x={where:g}); "
                f"a cash shift of +{-min_value:g} makes it nonnegative and "
                f"shifts the price by the same amount"
            )
        else:
            msg = "payoff is unbounded below (negative tail slope)"
        super().__init__(msg)


# ---------------------------------------------------------------------------
# AST nodes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Max:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Min:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pos:
    arg: "Node"


@dataclass(frozen=True)
class IndGt:
    arg: "Node"
    level: float


@dataclass(frozen=True)
class IndGe:
    arg: "Node"
    level: float


Node = Union[Const, Var, Add, Sub, Mul, Max, Min, Pos, IndGt, IndGe]


@dataclass(frozen=True)
class PayoffAst:
    """Validated payoff expression.

    ``warnings`` records semicontinuity notes (ind_ge) and an applied cash
    shift, if any.  ``cash_shift`` is the constant that was added to make the
    payoff nonnegative (0.0 unless parsed with ``auto_shift=True``).
    """

    root: Node
    source: str = ""
    warnings: tuple[str, ...] = ()
    cash_shift: float = 0.0


def _is_piecewise_constant(node: Node) -> bool:
    """True when the subexpression is piecewise constant in x (slopes all 0)."""
    if isinstance(node, Const):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, (IndGt, IndGe)):
        return True
    if isinstance(node, Pos):
        return _is_piecewise_constant(node.arg)
    if isinstance(node, (Add, Sub, Mul, Max, Min)):
        return _is_piecewise_constant(node.left) and _is_piecewise_constant(node.right)
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# Parser (recursive descent over a hand-rolled scanner)
# ---------------------------------------------------------------------------

_KEYWORDS = ("ind_gt", "ind_ge", "max", "min", "pos")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0  # 0-based cursor

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def here(self) -> int:
        """1-based offset of the next non-space character."""
        self._skip_ws()
        return self.pos + 1

    def take(self, ch: str) -> None:
        self._skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise PayoffSyntaxError(f"expected '{ch}'", self.here())
        self.pos += 1

    def try_take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def try_keyword(self) -> str | None:
        self._skip_ws()
        for kw in _KEYWORDS:
            if self.text.startswith(kw, self.pos):
                self.pos += len(kw)
                return kw
        return None

    def number(self) -> float:
        self._skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
        if self.pos == start or self.text[start:self.pos] == ".":
            raise PayoffSyntaxError("expected a number", start + 1)
        return float(self.text[start:self.pos])


class _Parser:
    def __init__(self, text: str):
        self.sc = _Scanner(text)
        self.warnings: list[str] = []

    def parse(self) -> Node:
        node = self.expr()
        self.sc._skip_ws()
        if self.sc.pos != len(self.sc.text):
            raise PayoffSyntaxError("unexpected trailing input", self.sc.pos + 1)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            if self.sc.try_take("+"):
                node = Add(node, self.term())
            elif self.sc.try_take("-"):
                node = Sub(node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            op_pos = self.sc.here()
            if not self.sc.try_take("*"):
                return node
            rhs = self.factor()
            if not (_is_piecewise_constant(node) or _is_piecewise_constant(rhs)):
                raise NonAffineProductError(op_pos)
            node = Mul(node, rhs)

    def factor(self) -> Node:
        pos = self.sc.here()
        kw = self.sc.try_keyword()
        if kw is not None:
            self.sc.take("(")
            arg = self.expr()
            if kw == "pos":
                self.sc.take(")")
                return Pos(arg)
            self.sc.take(",")
            if kw in ("max", "min"):
                rhs = self.expr()
                self.sc.take(")")
                return Max(arg, rhs) if kw == "max" else Min(arg, rhs)
            level = self.sc.number()
            self.sc.take(")")
            if kw == "ind_ge":
                self.warnings.append(
                    f"ind_ge at position {pos}: the payoff may fail lower "
                    f"semicontinuity at level {level:g}; ind_gt differs only at "
                    f"that point and has the same concave envelope"
                )
                return IndGe(arg, level)
            return IndGt(arg, level)
        ch = self.sc.peek()
        if ch == "(":
            self.sc.take("(")
            node = self.expr()
            self.sc.take(")")
            return node
        if ch == "x":
            self.sc.pos += 1
            return Var()
        if ch.isdigit() or ch == ".":
            return Const(self.sc.number())
        if ch == "":
            raise PayoffSyntaxError("unexpected end of input", pos)
        raise PayoffSyntaxError(f"unexpected character {ch!r}", pos)


def parse_payoff(text: str, auto_shift: bool = False) -> PayoffAst:
    """Parse a payoff expression and validate nonnegativity.

    Raises :class:`PayoffSyntaxError` (with a 1-based position) on malformed
    input, :class:`NonAffineProductError` for products like ``x*x``, and
    :class:`NegativePayoffError` when the payoff dips below zero.  With
    ``auto_shift=True`` a payoff that is bounded below is accepted as
    g + c with the smallest nonnegative-making cash shift c recorded in
    ``cash_shift`` (prices are cash invariant, so subtract c back).
    """
    parser = _Parser(text)
    root = parser.parse()
    warnings = list(parser.warnings)

    pa = _to_piecewise_node(root)
    if pa.tail_slope < 0.0:
        raise NegativePayoffError(-math.inf, math.inf)
    min_value, where = pa.min_point()
    shift = 0.0
    if min_value < 0.0:
        if not auto_shift:
            raise NegativePayoffError(min_value, where)
        shift = -min_value
        root = Add(root, Const(shift))
        warnings.append(
            f"payoff shifted by +{shift:g} to be nonnegative (minimum was "
            f"{min_value:g} at x={where:g}); subtract {shift:g} from the price"
        )
    return PayoffAst(root=root, source=text, warnings=tuple(warnings), cash_shift=shift)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_payoff(ast: PayoffAst, x: float) -> float:
    """Exact value g(x) by direct AST recursion (strict indicator semantics)."""
    if x < 0:
        raise ValueError("payoffs are defined on x >= 0")
    return _eval_node(ast.root, float(x))


def _eval_node(node: Node, x: float) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Add):
        return _eval_node(node.left, x) + _eval_node(node.right, x)
    if isinstance(node, Sub):
        return _eval_node(node.left, x) - _eval_node(node.right, x)
    if isinstance(node, Mul):
        return _eval_node(node.left, x) * _eval_node(node.right, x)
    if isinstance(node, Max):
        return max(_eval_node(node.left, x), _eval_node(node.right, x))
    if isinstance(node, Min):
        return min(_eval_node(node.left, x), _eval_node(node.right, x))
    if isinstance(node, Pos):
        return max(_eval_node(node.arg, x), 0.0)
    if isinstance(node, IndGt):
        return 1.0 if _eval_node(node.arg, x) > node.level else 0.0
    if isinstance(node, IndGe):
        return 1.0 if _eval_node(node.arg, x) >= node.level else 0.0
    raise TypeError(f"unknown node {node!r}")


# ---------------------------------------------------------------------------
# Piecewise-affine canonical form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Knot:
    """Breakpoint with one-sided limits.  ``left``/``right`` are the limits
    from below/above, ``value`` the exact value at x (they differ only at
    indicator jumps; the grammar can even isolate a single point, e.g.
    ind_ge(x,2) - ind_gt(x,2), which is why the point value is carried)."""

    x: float
    left: float
    value: float
    right: float


@dataclass(frozen=True)
class PiecewiseAffine:
    """Exact canonical form: sorted knots (first at x=0) + tail slope.

    Between consecutive knots the function is the affine interpolation of the
    adjacent one-sided limits; beyond the last knot it is the ray of slope
    ``tail_slope`` from the right limit.  Evaluation anchors at the left knot
    of each segment, so arithmetic order per segment is fixed.
    ``tail_slope == math.inf`` is a sentinel for superlinear tails (never
    produced by the grammar; tabulated payoffs must declare a finite slope).
    """

    knots: tuple[Knot, ...]
    tail_slope: float

    def __post_init__(self):
        if not self.knots or self.knots[0].x != 0.0:
            raise ValueError("piecewise-affine form needs a knot at x=0")
        xs = [k.x for k in self.knots]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("knots must be strictly increasing")

    @cached_property
    def _xs(self) -> np.ndarray:
        return np.array([k.x for k in self.knots])

    @cached_property
    def _values(self) -> np.ndarray:
        return np.array([k.value for k in self.knots])

    @cached_property
    def _rights(self) -> np.ndarray:
        return np.array([k.right for k in self.knots])

    @cached_property
    def segment_slopes(self) -> np.ndarray:
        """Slope on each open interval (x_i, x_{i+1})."""
        xs, rs = self._xs, self._rights
        ls = np.array([k.left for k in self.knots])
        return (ls[1:] - rs[:-1]) / (xs[1:] - xs[:-1])

    def __call__(self, x):
        xs = self._xs
        xv = np.asarray(x, dtype=float)
        scalar = xv.ndim == 0
        xv = np.atleast_1d(xv)
        if np.any(xv < 0):
            raise ValueError("payoffs are defined on x >= 0")
        idx = np.searchsorted(xs, xv, side="left")
        out = np.empty_like(xv)
        hit = (idx < len(xs)) & (xs[np.minimum(idx, len(xs) - 1)] == xv)
        out[hit] = self._values[idx[hit]]
        seg = ~hit
        if np.any(seg):
            i = idx[seg] - 1  # x > 0 off-knot, so idx >= 1
            interior = i < len(xs) - 1
            slopes = self.segment_slopes if len(xs) > 1 else np.empty(0)
            vals = np.empty(i.shape)
            if np.any(interior):
                ii = i[interior]
                vals[interior] = self._rights[ii] + slopes[ii] * (xv[seg][interior] - xs[ii])
            tail = ~interior
            if np.any(tail):
                vals[tail] = self._rights[-1] + self.tail_slope * (xv[seg][tail] - xs[-1])
            out[seg] = vals
        return float(out[0]) if scalar else out

    def min_point(self) -> tuple[float, float]:
        """(minimum over [0, inf), a location attaining/approaching it).

        The minimum over each affine segment sits at an endpoint, so knots and
        one-sided limits cover the whole domain; a negative tail slope means
        unbounded below (returned as -inf at x=inf).
        """
        if self.tail_slope < 0:
            return -math.inf, math.inf
        best, where = math.inf, 0.0
        for k in self.knots:
            for v in ((k.value, k.x), (k.right, k.x)) if k.x == 0.0 else (
                (k.left, k.x), (k.value, k.x), (k.right, k.x)
            ):
                if v[0] < best:
                    best, where = v
        return best, where

    def is_piecewise_constant(self) -> bool:
        return self.tail_slope == 0.0 and (
            len(self.knots) == 1 or bool(np.all(self.segment_slopes == 0.0))
        )

    def knot_xs(self) -> list[float]:
        return [k.x for k in self.knots]


def _pa_const(c: float) -> PiecewiseAffine:
    return PiecewiseAffine((Knot(0.0, c, c, c),), 0.0)


def _pa_var() -> PiecewiseAffine:
    return PiecewiseAffine((Knot(0.0, 0.0, 0.0, 0.0),), 1.0)


def _one_sided(pa: PiecewiseAffine, x: float) -> tuple[float, float, float]:
    """(left limit, value, right limit) at any x >= 0, exact at knots."""
    xs = pa._xs
    i = int(np.searchsorted(xs, x, side="left"))
    if i < len(xs) and pa.knots[i].x == x:
        k = pa.knots[i]
        return k.left, k.value, k.right
    j = i - 1
    kj = pa.knots[j]
    if j == len(xs) - 1:
        v = kj.right + pa.tail_slope * (x - kj.x)
    else:
        kn = pa.knots[j + 1]
        slope = (kn.left - kj.right) / (kn.x - kj.x)
        v = kj.right + slope * (x - kj.x)
    return v, v, v


def _simplify(knots: list[Knot], tail_slope: float) -> PiecewiseAffine:
    """Drop knots that are neither jumps nor slope breaks (x=0 always kept)."""
    kept = list(knots)
    changed = True
    while changed and len(kept) > 1:
        changed = False
        for i in range(len(kept) - 1, 0, -1):
            k = kept[i]
            if not (k.left == k.value == k.right):
                continue
            s_in = (k.left - kept[i - 1].right) / (k.x - kept[i - 1].x)
            if i == len(kept) - 1:
                s_out = tail_slope
            else:
                s_out = (kept[i + 1].left - k.right) / (kept[i + 1].x - k.x)
            if s_in == s_out:
                del kept[i]
                changed = True
    return PiecewiseAffine(tuple(kept), tail_slope)


def _union_grid(a: PiecewiseAffine, b: PiecewiseAffine) -> list[float]:
    return sorted(set(a.knot_xs()) | set(b.knot_xs()))


def _pointwise(a: PiecewiseAffine, b: PiecewiseAffine, op) -> PiecewiseAffine:
    """Combine by an operation that maps one-sided limits through ``op``
    (valid for +, -, max, min and for * when a factor is locally constant)."""
    grid = _union_grid(a, b)
    knots = []
    for x in grid:
        la, va, ra = _one_sided(a, x)
        lb, vb, rb = _one_sided(b, x)
        knots.append(Knot(x, op(la, lb), op(va, vb), op(ra, rb)))
    return knots, grid


def _pw_add(a: PiecewiseAffine, b: PiecewiseAffine) -> PiecewiseAffine:
    knots, _ = _pointwise(a, b, lambda u, v: u + v)
    return _simplify(knots, a.tail_slope + b.tail_slope)


def _pw_sub(a: PiecewiseAffine, b: PiecewiseAffine) -> PiecewiseAffine:
    knots, _ = _pointwise(a, b, lambda u, v: u - v)
    return _simplify(knots, a.tail_slope - b.tail_slope)


def _pw_mul(a: PiecewiseAffine, b: PiecewiseAffine) -> PiecewiseAffine:
    # at least one side is piecewise constant (checked at parse time), so the
    # product is affine on every open segment of the union grid
    if not a.is_piecewise_constant():
        a, b = b, a
    if not a.is_piecewise_constant():
        raise ValueError("product needs a piecewise-constant factor")
    knots, grid = _pointwise(a, b, lambda u, v: u * v)
    a_tail = _one_sided(a, grid[-1])[2]  # constant beyond the last knot
    return _simplify(knots, a_tail * b.tail_slope)


def _crossings(a: PiecewiseAffine, b: PiecewiseAffine, grid: list[float]) -> list[float]:
    """Interior points where the two affine pieces cross, plus a tail crossing."""
    out = []
    for x1, x2 in zip(grid, grid[1:]):
        ra = _one_sided(a, x1)[2]
        rb = _one_sided(b, x1)[2]
        sa = (_one_sided(a, x2)[0] - ra) / (x2 - x1)
        sb = (_one_sided(b, x2)[0] - rb) / (x2 - x1)
        if sa != sb:
            xc = x1 + (rb - ra) / (sa - sb)
            if x1 < xc < x2:
                out.append(xc)
    x_last = grid[-1]
    ra = _one_sided(a, x_last)[2]
    rb = _one_sided(b, x_last)[2]
    if a.tail_slope != b.tail_slope:
        xc = x_last + (rb - ra) / (a.tail_slope - b.tail_slope)
        if xc > x_last:
            out.append(xc)
    return out


def _pw_extremum(a: PiecewiseAffine, b: PiecewiseAffine, take_max: bool) -> PiecewiseAffine:
    op = max if take_max else min
    grid = sorted(set(_union_grid(a, b)) | set(_crossings(a, b, _union_grid(a, b))))
    knots = []
    for x in grid:
        la, va, ra = _one_sided(a, x)
        lb, vb, rb = _one_sided(b, x)
        knots.append(Knot(x, op(la, lb), op(va, vb), op(ra, rb)))
    # beyond the last knot the rays no longer cross; the eventual winner is the
    # larger (max) or smaller (min) ray, decided by slope then by value
    ra = _one_sided(a, grid[-1])[2]
    rb = _one_sided(b, grid[-1])[2]
    a_wins = (a.tail_slope, ra) > (b.tail_slope, rb)
    if not take_max:
        a_wins = (a.tail_slope, ra) < (b.tail_slope, rb)
    tail = a.tail_slope if a_wins else b.tail_slope
    return _simplify(knots, tail)


def _segment_indicator_value(e_lo: float, e_hi: float, level: float, strict: bool) -> float:
    """Indicator value on an open segment where e - level has constant sign
    (crossings were inserted as knots; the sign may touch 0 at endpoints)."""
    if e_lo > level or e_hi > level:
        return 1.0
    if e_lo < level or e_hi < level:
        return 0.0
    return 0.0 if strict else 1.0  # e == level on the whole segment


def _pw_indicator(e: PiecewiseAffine, level: float, strict: bool) -> PiecewiseAffine:
    if not math.isfinite(e.tail_slope):
        raise ValueError("indicator of an expression with infinite tail")
    const_level = _pa_const(level)
    grid = sorted(set(e.knot_xs()) | set(_crossings(e, const_level, e.knot_xs())))
    at = (lambda v: 1.0 if v > level else 0.0) if strict else (
        lambda v: 1.0 if v >= level else 0.0
    )
    knots = []
    for i, x in enumerate(grid):
        _, ev, _ = _one_sided(e, x)
        if i == 0:
            left_ind = at(ev)  # boundary: no open segment to the left
        else:
            lo = _one_sided(e, grid[i - 1])[2]
            hi = _one_sided(e, x)[0]
            left_ind = _segment_indicator_value(lo, hi, level, strict)
        if i == len(grid) - 1:
            lo = _one_sided(e, x)[2]
            hi = lo + e.tail_slope  # sign of e - level one unit into the tail
            right_ind = _segment_indicator_value(lo, hi, level, strict)
        else:
            lo = _one_sided(e, x)[2]
            hi = _one_sided(e, grid[i + 1])[0]
            right_ind = _segment_indicator_value(lo, hi, level, strict)
        knots.append(Knot(x, left_ind, at(ev), right_ind))
    return _simplify(knots, 0.0)


def _to_piecewise_node(node: Node) -> PiecewiseAffine:
    if isinstance(node, Const):
        return _pa_const(node.value)
    if isinstance(node, Var):
        return _pa_var()
    if isinstance(node, Add):
        return _pw_add(_to_piecewise_node(node.left), _to_piecewise_node(node.right))
    if isinstance(node, Sub):
        return _pw_sub(_to_piecewise_node(node.left), _to_piecewise_node(node.right))
    if isinstance(node, Mul):
        return _pw_mul(_to_piecewise_node(node.left), _to_piecewise_node(node.right))
    if isinstance(node, Max):
        return _pw_extremum(_to_piecewise_node(node.left), _to_piecewise_node(node.right), True)
    if isinstance(node, Min):
        return _pw_extremum(_to_piecewise_node(node.left), _to_piecewise_node(node.right), False)
    if isinstance(node, Pos):
        return _pw_extremum(_to_piecewise_node(node.arg), _pa_const(0.0), True)
    if isinstance(node, IndGt):
        return _pw_indicator(_to_piecewise_node(node.arg), node.level, strict=True)
    if isinstance(node, IndGe):
        return _pw_indicator(_to_piecewise_node(node.arg), node.level, strict=False)
    raise TypeError(f"unknown node {node!r}")


def to_piecewise(ast: PayoffAst) -> PiecewiseAffine:
    """Exact canonical piecewise-affine form of the payoff."""
    return _to_piecewise_node(ast.root)


# ---------------------------------------------------------------------------
# Lower-semicontinuity normalization
# ---------------------------------------------------------------------------

def lsc_normalize(ast: PayoffAst) -> tuple[PayoffAst, tuple[str, ...]]:
    """Rewrite ind_ge(e, K) to ind_gt(e, K).

    The two differ only at the single point where e equals K, so the concave
    envelope (hence the price) is unchanged; ind_gt is lower semicontinuous.
    Returns the normalized AST and the warnings describing each rewrite.
    """
    notes: list[str] = []

    def rewrite(node: Node) -> Node:
        if isinstance(node, (Const, Var)):
            return node
        if isinstance(node, IndGe):
            notes.append(
                f"ind_ge rewritten to ind_gt at level {node.level:g}: the two "
                f"differ only where the argument equals the level; the concave "
                f"envelope is unchanged"
            )
            return IndGt(rewrite(node.arg), node.level)
        if isinstance(node, IndGt):
            return IndGt(rewrite(node.arg), node.level)
        if isinstance(node, Pos):
            return Pos(rewrite(node.arg))
        return type(node)(rewrite(node.left), rewrite(node.right))

    new_root = rewrite(ast.root)
    kept = tuple(w for w in ast.warnings if "ind_ge at position" not in w)
    return (
        PayoffAst(new_root, ast.source, kept + tuple(notes), ast.cash_shift),
        tuple(notes),
    )
