"""Sparse integer polynomials in (q, y) keyed by scaled integer exponents.

The enumeration engines accumulate millions of small products; plain dicts
of Python ints are much faster here than the general localized series.
Keys are ``(q_exp * L, y_exp * L)`` for a scale ``L`` fixed per computation.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import Dict, Tuple

from .series_core import LocalizedLaurent, QYSeries

Poly2 = Dict[Tuple[int, int], int]


def mul_trunc(a: Poly2, b: Poly2, qmax: int) -> Poly2:
    out: Dict[Tuple[int, int], int] = defaultdict(int)
    for (p, x), v in a.items():
        room = qmax - p
        for (p2, x2), w in b.items():
            if p2 <= room:
                out[(p + p2, x + x2)] += v * w
    return {k: v for k, v in out.items() if v}


def add_into(acc: Dict[Tuple[int, int], int], a: Poly2, scale: int = 1) -> None:
    for k, v in a.items():
        acc[k] = acc.get(k, 0) + scale * v


def clean(a: Dict[Tuple[int, int], int]) -> Poly2:
    return {k: v for k, v in a.items() if v}


def one_minus_y_power(k: int, L: int) -> Poly2:
    """(1 - y)^k with y-exponents scaled by L."""
    out = {(0, 0): 1}
    for _ in range(k):
        nxt: Dict[Tuple[int, int], int] = defaultdict(int)
        for (p, x), v in out.items():
            nxt[(p, x)] += v
            nxt[(p, x + L)] -= v
        out = clean(nxt)
    return out


def to_series(a: Poly2, L: int, order) -> QYSeries:
    """Convert to a QYSeries; exponents must be integral after unscaling."""
    polys: Dict[int, Dict[Tuple[int, int], int]] = {}
    for (p, x), v in a.items():
        if p % L or x % L:
            raise ValueError(f"non-integral exponent q^{Fraction(p, L)} y^{Fraction(x, L)}")
        poly = polys.setdefault(p // L, {})
        poly[(2 * (x // L), 0)] = poly.get((2 * (x // L), 0), 0) + v
    return QYSeries({p: LocalizedLaurent(t) for p, t in polys.items()}, order)


def from_series(s: QYSeries, L: int) -> Poly2:
    out = {}
    for p, c in s.coeffs.items():
        if c.denom:
            raise ValueError("localized coefficient")
        for (e2, t2), v in c.terms.items():
            if t2 or e2 % 2 or Fraction(p).denominator != 1:
                raise ValueError("expected integer exponents")
            out[(int(p) * L, (e2 // 2) * L)] = int(v)
    return out
