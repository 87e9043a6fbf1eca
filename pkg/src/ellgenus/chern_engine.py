"""Elliptic genera from Chern roots: projective spaces, hypersurfaces, products.

The characteristic series (cleared of ``y^(-1/2)``) is

    Q(x) = x (1 - y e^-x)/(1 - e^-x)
           * prod_{n>=1} (1 - y q^n e^-x)(1 - y^-1 q^n e^x) / ((1 - q^n e^-x)(1 - q^n e^x))

and ``Q(0) = G(y, q)``.  The genus of a manifold whose tangent bundle plus
``r`` trivial summands splits into line bundles with roots ``x_i`` is the
top-degree part of ``prod Q(x_i) / G^r``.  The engine works with a single
nilpotent hyperplane class ``h``, which covers projective spaces, their
hypersurfaces and (through :func:`genus_product`) products of those.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence

from . import series_core as sc
from .series_core import Genus, LocalizedLaurent, QYSeries
from .theta_forms import product_series

L = LocalizedLaurent


class InternalInconsistency(RuntimeError):
    """A genus that must be a Laurent polynomial kept a denominator."""


class XSeries:
    """Polynomial in a nilpotent variable x (x^(D+1) = 0) with series coefficients."""

    __slots__ = ("coeffs", "D")

    def __init__(self, coeffs: Sequence, D: int):
        cs = [sc._as_series(c) for c in coeffs][: D + 1]
        cs += [QYSeries.zero() for _ in range(D + 1 - len(cs))]
        self.coeffs: List[QYSeries] = cs
        self.D = D

    def __getitem__(self, k: int) -> QYSeries:
        return self.coeffs[k]

    def __mul__(self, other: "XSeries") -> "XSeries":
        D = min(self.D, other.D)
        out = []
        for k in range(D + 1):
            acc = None
            for i in range(k + 1):
                a, b = self.coeffs[i], other.coeffs[k - i]
                if a.is_zero() or b.is_zero():
                    continue
                term = sc.mul(a, b)
                acc = term if acc is None else sc.add(acc, term)
            out.append(acc if acc is not None else QYSeries.zero())
        return XSeries(out, D)

    def __pow__(self, n: int) -> "XSeries":
        result = XSeries([QYSeries.one()], self.D)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def inv(self) -> "XSeries":
        """Inverse through the leading coefficient; finite because x is nilpotent."""
        c0inv = sc.inv(self.coeffs[0]) if not _is_constant(self.coeffs[0]) else \
            QYSeries({0: self.coeffs[0][0].inv()})
        out = [c0inv]
        for k in range(1, self.D + 1):
            acc = QYSeries.zero()
            for i in range(1, k + 1):
                if not self.coeffs[i].is_zero() and not out[k - i].is_zero():
                    acc = sc.add(acc, sc.mul(self.coeffs[i], out[k - i]))
            out.append(-sc.mul(acc, c0inv))
        return XSeries(out, self.D)

    def scale(self, k: int) -> "XSeries":
        """Substitute x -> k x."""
        return XSeries([c * (k ** m) for m, c in enumerate(self.coeffs)], self.D)


def _is_constant(s: QYSeries) -> bool:
    return set(s.coeffs) <= {0} and s.order == sc.INF


def _exp_poly_to_x(s: QYSeries, D: int) -> XSeries:
    """Turn a series whose t-variable stands for e^x into an XSeries."""
    facts = [math.factorial(m) for m in range(D + 1)]
    out: List[Dict[int, Dict[tuple, Fraction]]] = [dict() for _ in range(D + 1)]
    for p, c in s.coeffs.items():
        for (e2, t2), v in c.terms.items():
            j = t2 // 2
            for m in range(D + 1):
                w = Fraction(v * j ** m, facts[m]) if m else Fraction(v)
                if w:
                    poly = out[m].setdefault(p, {})
                    poly[(e2, 0)] = poly.get((e2, 0), 0) + w
    series = [QYSeries({p: L(poly) for p, poly in om.items()}, s.order) for om in out]
    return XSeries(series, D)


def todd_prefactor(D: int) -> XSeries:
    """x (1 - y e^-x)/(1 - e^-x) as an XSeries with polynomial-in-y coefficients."""
    # x/(1 - e^-x): invert (1 - e^-x)/x = sum (-1)^k x^k/(k+1)!
    inv_coeffs = [Fraction((-1) ** k, math.factorial(k + 1)) for k in range(D + 1)]
    todd = [Fraction(1)]
    for k in range(1, D + 1):
        todd.append(-sum(inv_coeffs[i] * todd[k - i] for i in range(1, k + 1)))
    lam = [L({(0, 0): 1, (2, 0): -1})] + [L.mono(-Fraction((-1) ** m, math.factorial(m)), 2)
                                          for m in range(1, D + 1)]
    out = []
    for k in range(D + 1):
        acc = L()
        for i in range(k + 1):
            acc = acc + lam[i] * todd[k - i]
        out.append(QYSeries({0: acc}))
    return XSeries(out, D)


def _theta_part(q_order: int) -> QYSeries:
    """prod_{n>=1} of the q-dependent factors, with t = e^x."""
    factors = []
    for n in range(1, q_order + 1):
        factors += [(2, n, 1, -2), (-2, n, 1, 2), (0, n, -1, -2), (0, n, -1, 2)]
    return product_series(factors, q_order)


def char_series(D: int, q_order: int, window=None) -> XSeries:
    """The cleared characteristic series Q(x) to x-degree D and q-order q_order."""
    return todd_prefactor(D) * _exp_poly_to_x(_theta_part(q_order), D)


def _finish(d: int, raw: QYSeries, label: str, calabi_yau: bool) -> Genus:
    for p, c in raw.coeffs.items():
        if c.denom:
            raise InternalInconsistency(f"{label}: denominator {c.denom} survives at q^{p}")
        for v in c.terms.values():
            if Fraction(v).denominator != 1:
                raise InternalInconsistency(f"{label}: non-integer coefficient at q^{p}")
    return Genus(d, raw, label, calabi_yau)


def _combine(apart: XSeries, ppart: XSeries, degree: int) -> QYSeries:
    """x^degree coefficient of apart*ppart where apart has q-free coefficients."""
    acc = None
    for i in range(degree + 1):
        a = apart[i]
        if a.is_zero():
            continue
        term = ppart[degree - i] * a[0]
        acc = term if acc is None else sc.add(acc, term)
    return acc if acc is not None else QYSeries.zero(ppart[0].order)


def ell_projective_space(n: int, q_order: int) -> Genus:
    """Cleared genus of P^n from c(P^n) = (1 + h)^(n+1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    theta = _exp_poly_to_x(_theta_part(q_order), n)
    p0inv = sc.inv(theta[0])
    apart = (todd_prefactor(n) ** (n + 1)) * XSeries([L.binomial_inverse(2)], n)
    ppart = (theta ** (n + 1)) * XSeries([p0inv], n)
    return _finish(n, _combine(apart, ppart, n), f"P^{n}", False)


@dataclass(frozen=True)
class HypersurfaceSpec:
    n: int
    k: int

    def __post_init__(self):
        if self.n < 2 or self.k < 1:
            raise ValueError("need n >= 2 and k >= 1")

    @property
    def d(self) -> int:
        return self.n - 1

    @property
    def calabi_yau(self) -> bool:
        return self.k == self.n + 1

    @property
    def label(self) -> str:
        return f"X_{self.k} in P^{self.n}"


def ell_hypersurface_projective(spec: HypersurfaceSpec, q_order: int) -> Genus:
    """Cleared genus of a smooth degree-k hypersurface in P^n.

    Tangent data: T X + O(k) + O = O(1)^(n+1) restricted to X, and integration
    over X is k h times integration over P^n.
    """
    n, k = spec.n, spec.k
    theta = _exp_poly_to_x(_theta_part(q_order), n)
    p0inv = sc.inv(theta[0])
    tp = todd_prefactor(n)
    apart = (tp ** (n + 1)) * tp.scale(k).inv() * XSeries([L.binomial_inverse(2)], n)
    ppart = (theta ** (n + 1)) * theta.scale(k).inv() * XSeries([p0inv], n)
    raw = _combine(apart, ppart, n - 1) * k
    return _finish(n - 1, raw, spec.label, spec.calabi_yau)


def genus_product(a: Genus, b: Genus) -> Genus:
    """Genus of a product manifold (the genus is multiplicative)."""
    label = f"{a.label} x {b.label}" if a.label and b.label else a.label or b.label
    return Genus(a.d + b.d, sc.mul(a.body, b.body), label, a.calabi_yau and b.calabi_yau)


def point_genus(q_order: int = sc.INF) -> Genus:
    """The genus of a point: body 1 in dimension 0."""
    return Genus(0, QYSeries.one(q_order), "pt", True)
