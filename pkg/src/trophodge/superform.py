"""Tropical superforms of bidegree (p,q) on a curve.

A superform stores one coefficient function per edge, written in the
edge's canonical chart.  The coefficient carrier EdgeFunction knows its
chart domain, an exact derivative when one is available (expression
trees and the built-in factories propagate derivatives analytically;
bare callables fall back to central differences), and an optional
tail-support bound: a coordinate b such that the function is constant on
(-inf, b].  The tail bound is what regularity at infinity is judged by.

Chart reversal y = -l - x transforms coefficients with the sign
(-1)^(p+q): (1,0)- and (0,1)-forms flip sign, (0,0)- and (1,1)-forms do
not.  All vertex conditions below are stated in vertex-local charts
derived by this rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .curve import Edge, TropicalCurve
from .expressions import Expression, parse_expression

__all__ = [
    "Bidegree",
    "EdgeFunction",
    "Superform",
    "RegularityReport",
    "DegreeOverflowError",
    "wedge",
    "d_second",
    "d_first",
    "is_regular",
    "evaluate",
    "reoriented",
]

NEG_INF = -math.inf


class DegreeOverflowError(ValueError):
    """Wedge product would exceed bidegree (1,1)."""


@dataclass(frozen=True)
class Bidegree:
    p: int
    q: int

    def __post_init__(self):
        if self.p not in (0, 1) or self.q not in (0, 1):
            raise ValueError(f"bidegree components must be 0 or 1, got ({self.p},{self.q})")

    @property
    def total(self) -> int:
        return self.p + self.q

    def as_tuple(self) -> tuple[int, int]:
        return (self.p, self.q)


def _as_bidegree(value) -> Bidegree:
    if isinstance(value, Bidegree):
        return value
    p, q = value
    return Bidegree(int(p), int(q))


def _central_difference(fn: Callable) -> Callable:
    def deriv(x):
        x = np.asarray(x, dtype=float)
        h = np.maximum(1e-6, 1e-8 * np.abs(x))
        return (fn(x + h) - fn(x - h)) / (2.0 * h)

    return deriv


class EdgeFunction:
    """One smooth coefficient on an edge chart.

    value(x) is numpy-vectorized.  derivative() returns another
    EdgeFunction; the factories below chain exact derivatives, and an
    EdgeFunction built from a bare callable differentiates numerically
    with step max(1e-6, 1e-8*|x|).
    """

    def __init__(
        self,
        value: Callable,
        derivative_factory: Callable[[], "EdgeFunction"] | None = None,
        tail_bound: float | None = None,
        domain: tuple[float, float] = (NEG_INF, 0.0),
        constant_value=None,
    ):
        self._value = value
        self._derivative_factory = derivative_factory
        self.tail_bound = tail_bound
        self.domain = (float(domain[0]), float(domain[1]))
        self.constant_value = constant_value
        self._product_of = None  # set by __mul__ / divide for exact cancellation
        self._quotient_of = None

    # -- construction -------------------------------------------------

    @classmethod
    def constant(cls, value, domain=(NEG_INF, 0.0)) -> "EdgeFunction":
        c = float(value)

        def f(x):
            x = np.asarray(x, dtype=float)
            return np.full(x.shape, c) if x.ndim else c

        return cls(
            f,
            derivative_factory=lambda: cls.constant(0.0, domain),
            tail_bound=0.0,
            domain=domain,
            constant_value=value if isinstance(value, Fraction) else c,
        )

    @classmethod
    def zero(cls, domain=(NEG_INF, 0.0)) -> "EdgeFunction":
        return cls.constant(0.0, domain)

    @classmethod
    def from_expression(cls, expr, tail_bound=None, domain=(NEG_INF, 0.0)) -> "EdgeFunction":
        if isinstance(expr, str):
            expr = parse_expression(expr)
        if not isinstance(expr, Expression):
            raise TypeError("expected an expression tree or source string")
        return cls(
            expr.eval,
            derivative_factory=lambda: cls.from_expression(expr.diff(), tail_bound, domain),
            tail_bound=tail_bound,
            domain=domain,
        )

    @classmethod
    def polynomial(cls, coeffs, domain=(NEG_INF, 0.0)) -> "EdgeFunction":
        """Polynomial sum(coeffs[k] * x^k) with exact derivative chain."""
        coeffs = [float(c) for c in coeffs]
        rev = coeffs[::-1]

        def f(x):
            return np.polyval(rev, np.asarray(x, dtype=float)) if np.ndim(x) else float(np.polyval(rev, x))

        if len(coeffs) <= 1:
            return cls.constant(coeffs[0] if coeffs else 0.0, domain)
        dcoeffs = [k * coeffs[k] for k in range(1, len(coeffs))]
        return cls(f, derivative_factory=lambda: cls.polynomial(dcoeffs, domain), domain=domain)

    @classmethod
    def from_callable(cls, fn, derivative=None, tail_bound=None, domain=(NEG_INF, 0.0)) -> "EdgeFunction":
        if derivative is None:
            return cls(fn, None, tail_bound, domain)
        if isinstance(derivative, EdgeFunction):
            return cls(fn, lambda: derivative, tail_bound, domain)
        return cls(fn, lambda: cls.from_callable(derivative, None, tail_bound, domain), tail_bound, domain)

    # -- evaluation ----------------------------------------------------

    def __call__(self, x):
        return self._value(x)

    def in_domain(self, x: float, slack: float = 1e-12) -> bool:
        lo, hi = self.domain
        return (lo - slack) <= x <= (hi + slack)

    def derivative(self) -> "EdgeFunction":
        if self._derivative_factory is not None:
            d = self._derivative_factory()
        else:
            d = EdgeFunction(_central_difference(self._value), None, None, self.domain)
        # constant beyond b differentiates to zero beyond b
        if d.tail_bound is None:
            d.tail_bound = self.tail_bound
        d.domain = self.domain
        return d

    # -- algebra (derivatives chain exactly) ---------------------------

    def _combine_tail(self, other) -> float | None:
        if self.tail_bound is None or other.tail_bound is None:
            return None
        return min(self.tail_bound, other.tail_bound)

    def __neg__(self) -> "EdgeFunction":
        out = EdgeFunction(
            lambda x: -self._value(x),
            derivative_factory=lambda: -self.derivative(),
            tail_bound=self.tail_bound,
            domain=self.domain,
        )
        if self.constant_value is not None:
            out.constant_value = -self.constant_value
        return out

    def __add__(self, other) -> "EdgeFunction":
        other = self._coerce(other)
        return EdgeFunction(
            lambda x: self._value(x) + other._value(x),
            derivative_factory=lambda: self.derivative() + other.derivative(),
            tail_bound=self._combine_tail(other),
            domain=self.domain,
        )

    def __sub__(self, other) -> "EdgeFunction":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "EdgeFunction":
        other = self._coerce(other)
        if other._quotient_of is not None and other._quotient_of[1] is self:
            # g * (f/g) = f exactly
            return other._quotient_of[0]
        if self._quotient_of is not None and self._quotient_of[1] is other:
            return self._quotient_of[0]
        out = EdgeFunction(
            lambda x: self._value(x) * other._value(x),
            derivative_factory=lambda: self.derivative() * other + self * other.derivative(),
            tail_bound=self._combine_tail(other),
            domain=self.domain,
        )
        out._product_of = (self, other)
        return out

    def divide(self, den: "EdgeFunction") -> "EdgeFunction":
        if self._product_of is not None:
            left, right = self._product_of
            if right is den:
                return left
            if left is den:
                return right
        out = EdgeFunction(
            lambda x: self._value(x) / den._value(x),
            derivative_factory=lambda: (self.derivative() * den - self * den.derivative()).divide(den * den),
            tail_bound=self._combine_tail(den),
            domain=self.domain,
        )
        out._quotient_of = (self, den)
        return out

    def scale(self, c: float) -> "EdgeFunction":
        c = float(c)
        out = EdgeFunction(
            lambda x: c * self._value(x),
            derivative_factory=lambda: self.derivative().scale(c),
            tail_bound=self.tail_bound,
            domain=self.domain,
        )
        if self.constant_value is not None:
            out.constant_value = c * float(self.constant_value)
        return out

    def _coerce(self, other) -> "EdgeFunction":
        if isinstance(other, EdgeFunction):
            if other.domain != self.domain:
                raise ValueError("edge functions live on different charts")
            return other
        return EdgeFunction.constant(float(other), self.domain)

    def reversed_chart(self, length: float, sign: int) -> "EdgeFunction":
        """Coefficient after the chart reversal y = -length - x."""

        def f(y):
            return sign * self._value(-length - np.asarray(y, dtype=float))

        return EdgeFunction(
            f,
            derivative_factory=lambda: self.derivative().reversed_chart(length, -sign),
            tail_bound=None,
            domain=self.domain,
        )


@dataclass(frozen=True)
class Superform:
    """Bidegree plus one coefficient per edge, in canonical charts."""

    bidegree: Bidegree
    coefficients: Mapping[str, EdgeFunction]
    vanishes_dimensionally: bool = False

    @classmethod
    def on_curve(cls, curve: TropicalCurve, bidegree, coefficients: Mapping) -> "Superform":
        """Build a form, attaching each edge's chart to its coefficient.

        ``coefficients`` maps edge id to an EdgeFunction, an expression
        source string, or a number (constant coefficient).  Missing edges
        get the zero coefficient.
        """
        bd = _as_bidegree(bidegree)
        unknown = set(coefficients) - {e.id for e in curve.edges}
        if unknown:
            raise KeyError(f"coefficients for edges not on the curve: {sorted(unknown)}")
        out = {}
        for e in curve.sorted_edges():
            fn = coefficients.get(e.id)
            if fn is None:
                fn = EdgeFunction.zero(e.chart)
            elif isinstance(fn, str):
                fn = EdgeFunction.from_expression(fn, domain=e.chart)
            elif isinstance(fn, (int, float, Fraction)):
                fn = EdgeFunction.constant(fn, e.chart)
            elif isinstance(fn, EdgeFunction):
                fn = EdgeFunction(
                    fn._value,
                    fn._derivative_factory,
                    fn.tail_bound,
                    e.chart,
                    fn.constant_value,
                )
            else:
                raise TypeError(f"bad coefficient for edge {e.id!r}: {fn!r}")
            out[e.id] = fn
        return cls(bd, out)

    @classmethod
    def zero_like(cls, form: "Superform", bidegree=None, flagged: bool = False) -> "Superform":
        bd = form.bidegree if bidegree is None else _as_bidegree(bidegree)
        coeffs = {eid: EdgeFunction.zero(fn.domain) for eid, fn in form.coefficients.items()}
        return cls(bd, coeffs, vanishes_dimensionally=flagged)

    def coefficient(self, edge_id: str) -> EdgeFunction:
        return self.coefficients[edge_id]

    def map_coefficients(self, op, bidegree=None, flagged=None) -> "Superform":
        bd = self.bidegree if bidegree is None else _as_bidegree(bidegree)
        return Superform(
            bd,
            {eid: op(fn) for eid, fn in self.coefficients.items()},
            self.vanishes_dimensionally if flagged is None else flagged,
        )


def wedge(a: Superform, b: Superform) -> Superform:
    """Pointwise wedge product; d'x ^ d''x = -d''x ^ d'x.

    The only reordering ever needed moves b's d'x factor past a's d''x,
    so the sign is (-1)^(a.q * b.p) and
    wedge(b, a) = (-1)^((a.p+a.q)(b.p+b.q)) wedge(a, b).
    """
    p, q = a.bidegree.p + b.bidegree.p, a.bidegree.q + b.bidegree.q
    if p > 1 or q > 1:
        raise DegreeOverflowError(
            f"wedge of bidegrees {a.bidegree.as_tuple()} and {b.bidegree.as_tuple()} exceeds (1,1)"
        )
    sign = -1 if (a.bidegree.q * b.bidegree.p) % 2 else 1
    out = {}
    for eid, fa in a.coefficients.items():
        fb = b.coefficients[eid]
        prod = fa * fb
        out[eid] = prod.scale(-1.0) if sign < 0 else prod
    return Superform(Bidegree(p, q), out)


def d_second(form: Superform) -> Superform:
    """The differential raising q: f -> f' d''x, f d'x -> -f' d'x^d''x.

    On q=1 forms the result vanishes for dimensional reasons; the zero
    form comes back flagged rather than as an error.
    """
    p, q = form.bidegree.as_tuple()
    if q == 1:
        return Superform.zero_like(form, (p, 1), flagged=True)
    if p == 0:
        return form.map_coefficients(lambda f: f.derivative(), bidegree=(0, 1))
    return form.map_coefficients(lambda f: -f.derivative(), bidegree=(1, 1))


def d_first(form: Superform) -> Superform:
    """The differential raising p: f -> f' d'x, f d''x -> +f' d'x^d''x."""
    p, q = form.bidegree.as_tuple()
    if p == 1:
        return Superform.zero_like(form, (1, q), flagged=True)
    if q == 0:
        return form.map_coefficients(lambda f: f.derivative(), bidegree=(1, 0))
    return form.map_coefficients(lambda f: f.derivative(), bidegree=(1, 1))


def evaluate(form: Superform, edge: str, x: float) -> float:
    """Coefficient value in the canonical chart; x must lie in the chart."""
    fn = form.coefficients[edge]
    if not fn.in_domain(x):
        raise ValueError(f"coordinate {x} outside chart {fn.domain} of edge {edge!r}")
    return float(fn(x))


def end_value(form: Superform, edge: Edge, end: str) -> float:
    """Vertex-local coefficient value at one edge-end.

    The canonical chart already has the head at 0; a tail end is read
    through the chart reversal, which contributes the sign (-1)^(p+q)
    for (1,0)- and (0,1)-forms.
    """
    fn = form.coefficients[edge.id]
    if end == "head":
        return float(fn(0.0))
    if edge.infinite:
        raise ValueError(f"tail of infinite edge {edge.id!r} is a point at -inf")
    value = float(fn(-edge.length))
    if form.bidegree.total == 1:
        value = -value
    return value


_TAIL_OFFSETS = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


@dataclass(frozen=True)
class RegularityReport:
    continuity: dict = field(default_factory=dict)
    kirchhoff: dict = field(default_factory=dict)
    at_infinity: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            all(ok for ok, _ in self.continuity.values())
            and all(ok for ok, _ in self.kirchhoff.values())
            and all(ok for ok, _ in self.at_infinity.values())
        )

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "continuity": {v: {"passed": ok, "detail": d} for v, (ok, d) in self.continuity.items()},
            "kirchhoff": {v: {"passed": ok, "residual": r} for v, (ok, r) in self.kirchhoff.items()},
            "at_infinity": {e: {"passed": ok, "detail": d} for e, (ok, d) in self.at_infinity.items()},
        }


def _tail_entry(fn: EdgeFunction, bidegree: Bidegree, tol: float) -> tuple[bool, str]:
    b = fn.tail_bound
    if b is None:
        return False, "no tail-support bound declared"
    samples = np.array([b - off for off in _TAIL_OFFSETS])
    values = np.atleast_1d(np.asarray(fn(samples), dtype=float))
    if bidegree.as_tuple() == (0, 0):
        spread = float(np.max(np.abs(values - values[0])))
        if spread <= tol:
            return True, f"constant beyond {b} (spread {spread:.3e})"
        return False, f"not constant beyond {b} (spread {spread:.3e})"
    peak = float(np.max(np.abs(values)))
    if peak <= tol:
        return True, f"vanishes beyond {b} (peak {peak:.3e})"
    return False, f"nonzero beyond {b} (peak {peak:.3e})"


def is_regular(form: Superform, curve: TropicalCurve, tol: float = 1e-10) -> RegularityReport:
    """Continuity / Kirchhoff / regularity-at-infinity report for a form.

    (0,0): values at every vertex agree across incident edge-ends and the
    coefficient is constant beyond the declared tail bound on each
    infinite edge.  (1,0): the vertex-local end values sum to |residual|
    <= tol at every vertex of degree >= 2, and the coefficient vanishes
    beyond the tail bound.  (0,1) and (1,1): only the condition at
    infinity applies.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    bd = form.bidegree
    continuity: dict = {}
    kirchhoff: dict = {}
    at_infinity: dict = {}

    if bd.as_tuple() == (0, 0):
        for v in curve.sorted_vertices():
            ends = [(e, side) for e, side in curve.edge_ends_at(v) if not (e.infinite and side == "tail")]
            if len(ends) < 2:
                continue
            values = [end_value(form, e, side) for e, side in ends]
            spread = max(values) - min(values)
            continuity[v] = (spread <= tol, f"end values spread {spread:.3e}")
    elif bd.as_tuple() == (1, 0):
        for v in curve.sorted_vertices():
            if curve.degree(v) < 2:
                continue
            total = 0.0
            for e, side in curve.edge_ends_at(v):
                if e.infinite and side == "tail":
                    continue
                total += end_value(form, e, side)
            kirchhoff[v] = (abs(total) <= tol, total)

    for e in curve.infinite_edges():
        at_infinity[e.id] = _tail_entry(form.coefficients[e.id], bd, tol)

    return RegularityReport(continuity, kirchhoff, at_infinity)


def reoriented(form: Superform, curve: TropicalCurve, edge_id: str) -> Superform:
    """Coefficients of ``form`` on the curve with ``edge_id`` reversed.

    Applies the chart-reversal rule on that edge: y = -l - x with the
    sign (-1)^(p+q).
    """
    e = curve.edge(edge_id)
    sign = -1 if form.bidegree.total == 1 else 1
    out = dict(form.coefficients)
    out[edge_id] = form.coefficients[edge_id].reversed_chart(e.length, sign)
    return Superform(form.bidegree, out, form.vanishes_dimensionally)
