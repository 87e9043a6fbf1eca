"""Theta, eta, G, f and Eisenstein series: q-expansions and numeric values.

Series live in :mod:`ellgenus.series_core`.  The theta and eta functions
carry a fractional power of q and a phase; :class:`PrefixedSeries` keeps
those outside the integer-exponent body so that quotients of equal prefixes
become ordinary :class:`QYSeries`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from . import series_core as sc
from .series_core import INF, FunctionCert, LocalizedLaurent, QYSeries, SlopeCert

L = LocalizedLaurent


class DomainError(ValueError):
    """Raised for a numeric point outside the upper half plane."""


# --------------------------------------------------------------------------
# Prefixed series
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PrefixedSeries:
    """``(-i)^phase * q^q_shift * body``."""

    q_shift: Fraction
    phase: int
    body: QYSeries

    def __post_init__(self):
        shift = Fraction(self.q_shift)
        if (shift * 24).denominator != 1:
            raise sc.GridError("q-shift must be a multiple of 1/24")
        object.__setattr__(self, "q_shift", shift)
        object.__setattr__(self, "phase", self.phase % 4)

    def __mul__(self, other: "PrefixedSeries") -> "PrefixedSeries":
        return PrefixedSeries(self.q_shift + other.q_shift, self.phase + other.phase,
                              sc.mul(self.body, other.body))

    def __pow__(self, n: int) -> "PrefixedSeries":
        return PrefixedSeries(self.q_shift * n, self.phase * n, self.body ** n)

    def __truediv__(self, other: "PrefixedSeries") -> "PrefixedSeries":
        return PrefixedSeries(self.q_shift - other.q_shift, self.phase - other.phase,
                              sc.exact_div(self.body, other.body))

    def as_series(self) -> QYSeries:
        """Reduce to a plain series; only possible with trivial prefix."""
        if self.q_shift != 0 or self.phase != 0:
            raise ValueError("nontrivial prefix; divide by a matching series first")
        return self.body

    def __eq__(self, other) -> bool:
        if not isinstance(other, PrefixedSeries):
            return NotImplemented
        return (self.q_shift, self.phase) == (other.q_shift, other.phase) and self.body == other.body


# --------------------------------------------------------------------------
# Support bounds
# --------------------------------------------------------------------------

def _tri_reach(f: sc.Number) -> int:
    """Largest n with n(n+1)/2 <= f."""
    if f < 0:
        return -1
    n = int((math.isqrt(int(8 * math.floor(f) + 1)) - 1) // 2)
    return n


def theta_cert() -> FunctionCert:
    # triple product: body = sum_n (-1)^n y^(n+1/2) q^(n(n+1)/2)
    return FunctionCert(lambda f: -Fraction(1, 2) - _tri_reach(f),
                        lambda f: Fraction(1, 2) + _tri_reach(f))


# --------------------------------------------------------------------------
# Series
# --------------------------------------------------------------------------

def product_series(factors: Sequence[Tuple[int, ...]], order: int) -> QYSeries:
    """Product of binomial powers, truncated at q^order.

    A factor ``(y2, q, k)`` or ``(y2, q, k, t2)`` stands for
    ``(1 - y^(y2/2) t^(t2/2) q^q)^k``; negative powers are expanded as
    geometric series (q must then be positive).
    """
    result: dict = {0: {(0, 0): 1}}
    for factor in factors:
        y2, qe, k = factor[:3]
        t2 = factor[3] if len(factor) > 3 else 0
        if qe > order:
            continue
        for _ in range(abs(k)):
            new: dict = {}
            if k > 0:
                for p, poly in result.items():
                    for target, sign in ((p, 1), (p + qe, -1)):
                        if target > order:
                            continue
                        dst = new.setdefault(target, {})
                        for (e, t), c in poly.items():
                            key = (e + y2, t + t2) if sign < 0 else (e, t)
                            dst[key] = dst.get(key, 0) + sign * c
            else:
                if qe <= 0:
                    raise ValueError("geometric expansion needs a positive q-exponent")
                for p, poly in result.items():
                    j = 0
                    while p + j * qe <= order:
                        dst = new.setdefault(p + j * qe, {})
                        for (e, t), c in poly.items():
                            key = (e + j * y2, t + j * t2)
                            dst[key] = dst.get(key, 0) + c
                        j += 1
            result = {p: {e: c for e, c in poly.items() if c} for p, poly in new.items()}
    return QYSeries({p: L(poly) for p, poly in result.items() if poly}, order)


def theta_reduced(order: int, window: Optional[Tuple[sc.Number, sc.Number]] = None) -> PrefixedSeries:
    """theta(z, tau) = (-i) q^(1/8) (y^(1/2) - y^(-1/2)) prod (1-q^l)(1-q^l y)(1-q^l/y)."""
    factors = []
    for l in range(1, order + 1):
        factors += [(0, l, 1), (2, l, 1), (-2, l, 1)]
    prod = product_series(factors, order)
    body = sc.mul(QYSeries({0: L({(1, 0): 1, (-1, 0): -1})}), prod)
    body = QYSeries(body.coeffs, order, window, theta_cert())
    return PrefixedSeries(Fraction(1, 8), 1, body)


def eta_series(order: int, scale: int = 1) -> PrefixedSeries:
    """eta(scale*tau) = q^(scale/24) prod (1 - q^(scale*l))."""
    body = product_series([(0, scale * l, 1) for l in range(1, order // scale + 1)], order)
    return PrefixedSeries(Fraction(scale, 24), 0, body)


def g_series(order: int, window: Optional[Tuple[sc.Number, sc.Number]] = None) -> QYSeries:
    """G(y, q) = prod_{k>=1} (1 - y q^(k-1))(1 - y^-1 q^k) / (1 - q^k)^2."""
    factors = []
    for k in range(1, order + 2):
        factors.append((2, k - 1, 1))
        if k <= order:
            factors += [(-2, k, 1), (0, k, -2)]
    body = product_series(factors, order)
    return QYSeries(body.coeffs, order, window, SlopeCert(1, 1, 0, 1))


def g_unit_series(order: int) -> QYSeries:
    """G/(1 - y): the part of G with constant term 1."""
    factors = []
    for k in range(1, order + 1):
        factors += [(2, k, 1), (-2, k, 1), (0, k, -2)]
    return product_series(factors, order)


def f_series(order: int) -> QYSeries:
    """f = theta(2z)/theta(z): the index-3/2 form with y^(±1/2) at q^0."""
    th = theta_reduced(order).body
    doubled = QYSeries({p: L({(2 * e, t): v for (e, t), v in c.terms.items()})
                        for p, c in th.coeffs.items()}, order)
    return sc.exact_div(doubled, th)


def divisor_sigma(n: int, k: int) -> int:
    return sum(d ** k for d in range(1, n + 1) if n % d == 0)


def eisenstein(k: int, order: int) -> QYSeries:
    """Normalized E4 or E6 (constant term 1)."""
    if k == 4:
        c = 240
    elif k == 6:
        c = -504
    else:
        raise ValueError("only weights 4 and 6 are provided")
    coeffs = {0: 1}
    for n in range(1, order + 1):
        coeffs[n] = c * divisor_sigma(n, k - 1)
    return QYSeries({p: L.const(v) for p, v in coeffs.items()}, order)


# --------------------------------------------------------------------------
# Numeric evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NumericPoint:
    tau: complex
    z: complex = 0j
    nu: Tuple[complex, ...] = ()

    def __post_init__(self):
        if complex(self.tau).imag <= 0:
            raise DomainError("tau must lie in the upper half plane")


def _check_tau(tau: complex) -> None:
    if complex(tau).imag <= 0:
        raise DomainError("tau must lie in the upper half plane")


def _tail_bound(aq: float, spread: float, terms: int) -> float:
    """Bound on |prod_{n>terms}(1+u_n) - 1| where |u_n| <= e^{s_n} - 1, s_n = spread |q|^n."""
    if aq >= 1:
        return INF
    s = spread * aq ** (terms + 1) / (1 - aq)
    return math.expm1(s * math.exp(s))


def theta_numeric(p: NumericPoint, terms: int = 60) -> Tuple[complex, float]:
    """theta(z, tau) by truncated product; returns (value, absolute error bound)."""
    tau, z = complex(p.tau), complex(p.z)
    _check_tau(tau)
    q = cmath.exp(2j * math.pi * tau)
    y = cmath.exp(2j * math.pi * z)
    val = cmath.exp(1j * math.pi * tau / 4) * 2 * cmath.sin(math.pi * z)
    qn = 1
    for _ in range(terms):
        qn *= q
        val *= (1 - qn) * (1 - qn * y) * (1 - qn / y)
    aq, ay = abs(q), abs(y)
    err = abs(val) * _tail_bound(aq, 1 + ay + 1 / ay, terms)
    return val, err


def eta_numeric(tau: complex, terms: int = 60) -> Tuple[complex, float]:
    tau = complex(tau)
    _check_tau(tau)
    q = cmath.exp(2j * math.pi * tau)
    val = cmath.exp(2j * math.pi * tau / 24)
    qn = 1
    for _ in range(terms):
        qn *= q
        val *= 1 - qn
    return val, abs(val) * _tail_bound(abs(q), 1, terms)


def g_numeric(z: complex, tau: complex, terms: int = 60) -> complex:
    """G(y, q) at y = e^{2 pi i z}, q = e^{2 pi i tau} by direct product."""
    _check_tau(complex(tau))
    q = cmath.exp(2j * math.pi * complex(tau))
    y = cmath.exp(2j * math.pi * complex(z))
    val = 1 - y
    qn = 1
    for _ in range(terms):
        qn *= q
        val *= (1 - y * qn) * (1 - qn / y) / (1 - qn) ** 2
    return val


def evaluate_series(s: QYSeries, y0: complex, q0: complex) -> complex:
    """Numeric value of a truncated, denominator-free series at (y0, q0)."""
    total = 0j
    for p, c in s.coeffs.items():
        if c.denom:
            raise ValueError("cannot evaluate localized coefficients")
        qp = q0 ** float(p) if p else 1
        for (e2, t2), v in c.terms.items():
            total += float(v) * y0 ** (e2 / 2) * qp
    return total
