"""Exact truncated q-series with Laurent-polynomial coefficients in y (and t).

Coefficients live in the ring of Laurent polynomials over the rationals,
localized at binomials ``1 - y^a t^b``.  Exponents of y and t are stored as
integers counting halves, so ``y^(1/2)`` is the exponent pair ``(1, 0)``.
q-exponents are rationals (ints whenever possible).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

Number = Union[int, Fraction]
Exp = Tuple[int, int]
Poly = Dict[Exp, Number]

INF = math.inf


class SeriesError(Exception):
    """Base class for series arithmetic failures."""


class GridError(SeriesError):
    pass


class WindowError(SeriesError):
    pass


class NotInvertible(SeriesError):
    pass


class NotDivisible(SeriesError):
    pass


class PoleAtEvaluation(SeriesError):
    pass


def _num(x: Number) -> Number:
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


def _qexp(x) -> Number:
    if isinstance(x, float):
        if not x.is_integer():
            raise GridError(f"q-exponent {x} is not exact")
        return int(x)
    return _num(Fraction(x)) if not isinstance(x, int) else x


# --------------------------------------------------------------------------
# Laurent polynomial helpers (dicts from exponent pairs to rationals)
# --------------------------------------------------------------------------

def _padd(a: Poly, b: Poly, sign: int = 1) -> Poly:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + sign * c
        if v:
            out[e] = _num(v)
        else:
            out.pop(e, None)
    return out


def _pmul(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out: Poly = {}
    get = out.get
    for (b0, b1), cb in b.items():
        for (a0, a1), ca in a.items():
            k = (a0 + b0, a1 + b1)
            out[k] = get(k, 0) + ca * cb
    return {e: _num(c) for e, c in out.items() if c}


def _pscale(a: Poly, s: Number) -> Poly:
    if s == 0:
        return {}
    return {e: _num(c * s) for e, c in a.items()}


def _pshift(a: Poly, m: Exp) -> Poly:
    return {(e[0] + m[0], e[1] + m[1]): c for e, c in a.items()}


def _binom(v: Exp) -> Poly:
    return {(0, 0): 1, v: -1}


def _canon_binom(v: Exp) -> Tuple[Exp, bool]:
    """Orient a binomial exponent so the first nonzero entry is positive.

    Returns (canonical exponent, flipped).  ``1 - m^{-1} = -m^{-1}(1 - m)``.
    """
    if v[0] > 0 or (v[0] == 0 and v[1] > 0):
        return v, False
    if v == (0, 0):
        raise ValueError("binomial 1 - 1 is zero")
    return (-v[0], -v[1]), True


def _pdiv_binom(a: Poly, v: Exp) -> Optional[Poly]:
    """Exact quotient of ``a`` by ``1 - y^v``, or None when not divisible.

    ``v`` must be canonical.  Along each line ``e + Z v`` the numerator is a
    polynomial in ``X = y^v``; dividing by ``1 - X`` means taking prefix sums,
    which terminate exactly when the coefficients along the line sum to zero.
    """
    if not a:
        return {}
    axis = 0 if v[0] != 0 else 1
    step = v[axis]
    lines: Dict[Exp, Dict[int, Number]] = {}
    for e, c in a.items():
        k = e[axis] // step
        base = (e[0] - k * v[0], e[1] - k * v[1])
        lines.setdefault(base, {})[k] = c
    out: Poly = {}
    for base, seq in lines.items():
        ks = sorted(seq)
        acc: Number = 0
        kmax = ks[-1]
        i = 0
        for k in range(ks[0], kmax + 1):
            if i < len(ks) and ks[i] == k:
                acc += seq[k]
                i += 1
            if k == kmax:
                if acc != 0:
                    return None
                break
            if acc:
                out[(base[0] + k * v[0], base[1] + k * v[1])] = _num(acc)
    return out


def _pfmt_exp(e2: int) -> str:
    return str(e2 // 2) if e2 % 2 == 0 else f"{e2}/2"


def _fmt_num(c: Number) -> str:
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# --------------------------------------------------------------------------
# LocalizedLaurent
# --------------------------------------------------------------------------

class LocalizedLaurent:
    """A Laurent polynomial in (y, t) divided by a multiset of binomials."""

    __slots__ = ("terms", "denom", "_hash")

    def __init__(self, terms: Optional[Mapping[Exp, Number]] = None,
                 denom: Iterable[Exp] = (), _trusted: bool = False):
        if _trusted:
            self.terms: Poly = dict(terms) if terms else {}
            self.denom: Tuple[Exp, ...] = tuple(denom)
            self._hash = None
            return
        num: Poly = {}
        for e, c in (terms or {}).items():
            if len(e) != 2 or not all(isinstance(x, int) for x in e):
                raise GridError(f"exponent {e!r} is not on the half-integer grid")
            if c:
                num[e] = _num(c)
        dens: List[Exp] = []
        for v in denom:
            v = (int(v[0]), int(v[1]))
            cv, flipped = _canon_binom(v)
            if flipped:
                # 1/(1 - m^{-1}) = -m / (1 - m)
                num = _pscale(_pshift(num, cv), -1)
            dens.append(cv)
        self.terms, self.denom = _cancel(num, dens)
        self._hash = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "LocalizedLaurent":
        return cls({(0, 0): c} if c else {}, _trusted=True)

    @classmethod
    def mono(cls, c: Number, y2: int = 0, t2: int = 0) -> "LocalizedLaurent":
        return cls({(y2, t2): _num(c)} if c else {}, _trusted=True)

    @classmethod
    def from_y(cls, coeffs: Mapping[Number, Number]) -> "LocalizedLaurent":
        """Build from a mapping of (possibly half-integer) y-exponents."""
        terms = {}
        for e, c in coeffs.items():
            e2 = Fraction(e) * 2
            if e2.denominator != 1:
                raise GridError(f"y-exponent {e} is not a half-integer")
            if c:
                terms[(int(e2), 0)] = c
        return cls(terms)

    @classmethod
    def binomial_inverse(cls, y2: int, t2: int = 0) -> "LocalizedLaurent":
        """The symbolic factor ``1/(1 - y^(y2/2) t^(t2/2))``."""
        return cls({(0, 0): 1}, [(y2, t2)])

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_polynomial(self) -> bool:
        return not self.denom

    def __bool__(self) -> bool:
        return bool(self.terms)

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self) -> "LocalizedLaurent":
        return LocalizedLaurent({e: -c for e, c in self.terms.items()}, self.denom, _trusted=True)

    def __add__(self, other) -> "LocalizedLaurent":
        other = _as_ll(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        if self.denom == other.denom:
            num = _padd(self.terms, other.terms)
            if not self.denom:
                return LocalizedLaurent(num, (), _trusted=True)
            t, d = _cancel(num, list(self.denom))
            return LocalizedLaurent(t, d, _trusted=True)
        common = _multiset_union(self.denom, other.denom)
        na = _pmul_binoms(self.terms, _multiset_diff(common, self.denom))
        nb = _pmul_binoms(other.terms, _multiset_diff(common, other.denom))
        t, d = _cancel(_padd(na, nb), list(common))
        return LocalizedLaurent(t, d, _trusted=True)

    __radd__ = __add__

    def __sub__(self, other) -> "LocalizedLaurent":
        return self + (-_as_ll(other))

    def __rsub__(self, other) -> "LocalizedLaurent":
        return _as_ll(other) + (-self)

    def __mul__(self, other) -> "LocalizedLaurent":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return LocalizedLaurent(_trusted=True)
            return LocalizedLaurent(_pscale(self.terms, other), self.denom, _trusted=True)
        other = _as_ll(other)
        if not self.terms or not other.terms:
            return LocalizedLaurent(_trusted=True)
        num = _pmul(self.terms, other.terms)
        if not self.denom and not other.denom:
            return LocalizedLaurent(num, (), _trusted=True)
        t, d = _cancel(num, list(self.denom) + list(other.denom))
        return LocalizedLaurent(t, d, _trusted=True)

    __rmul__ = __mul__

    def shift(self, y2: int, t2: int = 0) -> "LocalizedLaurent":
        """Multiply by the monomial ``y^(y2/2) t^(t2/2)``."""
        return LocalizedLaurent(_pshift(self.terms, (y2, t2)), self.denom, _trusted=True)

    def inv(self) -> "LocalizedLaurent":
        """Inverse in the localized ring; the numerator must be a unit."""
        if not self.terms:
            raise NotInvertible("zero is not invertible")
        factors, c, mono = _factor_unit(self.terms)
        num = _pmul_binoms({(-mono[0], -mono[1]): _num(Fraction(1) / Fraction(c))}, self.denom)
        return LocalizedLaurent(num, factors)

    def __truediv__(self, other) -> "LocalizedLaurent":
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        return self * _as_ll(other).inv()

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = LocalizedLaurent.const(other)
        if not isinstance(other, LocalizedLaurent):
            return NotImplemented
        if self.denom == other.denom:
            return self.terms == other.terms
        common = _multiset_union(self.denom, other.denom)
        na = _pmul_binoms(self.terms, _multiset_diff(common, self.denom))
        nb = _pmul_binoms(other.terms, _multiset_diff(common, other.denom))
        return na == nb

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((tuple(sorted(self.terms.items())), self.denom))
        return self._hash

    # -- substitutions ------------------------------------------------------
    def subst_y_invert(self) -> "LocalizedLaurent":
        return LocalizedLaurent({(-e[0], e[1]): c for e, c in self.terms.items()},
                                [(-v[0], v[1]) for v in self.denom])

    def eval_y(self, v: int) -> Number:
        """Substitute y = v for v in {+1, -1}; t must be absent."""
        if v not in (1, -1):
            raise ValueError("eval_y supports v = +1 or -1")
        total: Number = 0
        for (e2, t2), c in self.terms.items():
            if t2:
                raise ValueError("eval_y needs a t-free coefficient")
            if v == -1 and e2 % 2:
                raise GridError("half-integer y-exponent at y = -1 has no rational value")
            total += c * (v ** (e2 // 2) if v == -1 else 1)
        for a2, b2 in self.denom:
            if b2:
                raise ValueError("eval_y needs t-free denominators")
            if a2 % 2:
                raise GridError("half-integer binomial cannot be evaluated")
            val = 1 - (v ** (a2 // 2) if v == -1 else 1)
            if val == 0:
                raise PoleAtEvaluation(f"denominator (1 - y^{_pfmt_exp(a2)}) vanishes at y = {v}")
            total = Fraction(total) / val
        return _num(total)

    def y_range(self) -> Tuple[int, int]:
        """Smallest and largest y-exponent (in halves) of the numerator."""
        ys = [e[0] for e in self.terms]
        return min(ys), max(ys)

    def sorted_terms(self) -> List[Tuple[Exp, Number]]:
        return sorted(self.terms.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def __repr__(self) -> str:
        return f"LocalizedLaurent({format_laurent(self)})"


def _as_ll(x) -> LocalizedLaurent:
    if isinstance(x, LocalizedLaurent):
        return x
    if isinstance(x, (int, Fraction)):
        return LocalizedLaurent.const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to LocalizedLaurent")


def _multiset_union(a: Sequence[Exp], b: Sequence[Exp]) -> Tuple[Exp, ...]:
    out: List[Exp] = []
    for v in sorted(set(a) | set(b)):
        out.extend([v] * max(a.count(v), b.count(v)))
    return tuple(out)


def _multiset_diff(a: Sequence[Exp], b: Sequence[Exp]) -> List[Exp]:
    out = list(a)
    for v in b:
        out.remove(v)
    return out


def _pmul_binoms(a: Poly, vs: Iterable[Exp]) -> Poly:
    for v in vs:
        a = _padd(a, _pshift(a, v), -1)
    return a


def _cancel(num: Poly, dens: List[Exp]) -> Tuple[Poly, Tuple[Exp, ...]]:
    """Greedy cancellation of denominator binomials dividing the numerator."""
    if not num:
        return {}, ()
    kept: List[Exp] = []
    for v in sorted(dens):
        q = _pdiv_binom(num, v)
        if q is None:
            kept.append(v)
        else:
            num = q
    return num, tuple(kept)


def _factor_unit(terms: Poly) -> Tuple[List[Exp], Number, Exp]:
    """Write ``terms = c * mono * prod(1 - y^v)``; raise when impossible."""
    factors: List[Exp] = []
    cur = dict(terms)
    while len(cur) > 1:
        low = min(cur)
        cands = sorted({_canon_binom((e[0] - low[0], e[1] - low[1]))[0] for e in cur if e != low},
                       key=lambda v: (abs(v[0]) + abs(v[1]), v))
        for v in cands:
            q = _pdiv_binom(cur, v)
            if q is not None:
                factors.append(v)
                cur = q
                break
        else:
            raise NotInvertible("numerator is not a monomial times binomials")
    (mono, c), = cur.items()
    return factors, c, mono


def format_laurent(a: LocalizedLaurent, var: str = "y") -> str:
    if not a.terms:
        return "0"
    parts = []
    for (e2, t2), c in a.sorted_terms():
        mono = []
        if e2:
            mono.append(f"{var}^{_pfmt_exp(e2)}")
        if t2:
            mono.append(f"t^{_pfmt_exp(t2)}")
        parts.append(" ".join([_fmt_num(c)] + mono))
    s = " + ".join(parts)
    if a.denom:
        ds = "".join(f"(1 - {var}^{_pfmt_exp(v[0])}" + (f" t^{_pfmt_exp(v[1])}" if v[1] else "") + ")"
                     for v in a.denom)
        s = f"[{s}] / {ds}"
    return s


# --------------------------------------------------------------------------
# Support certificates
# --------------------------------------------------------------------------

class SupportCert:
    """Bounds on the y-exponents (ordinary units) of each q-coefficient."""

    def lower(self, q: Number) -> Number:
        raise NotImplementedError

    def upper(self, q: Number) -> Number:
        raise NotImplementedError

    def min_lower(self, qmax: Number) -> Number:
        return min(self.lower(j) for j in range(0, int(math.floor(qmax)) + 1))

    def max_upper(self, qmax: Number) -> Number:
        return max(self.upper(j) for j in range(0, int(math.floor(qmax)) + 1))


@dataclass(frozen=True)
class SlopeCert(SupportCert):
    """y-exponents of the q^j coefficient lie in [-s_minus*j - c_minus, s_plus*j + c_plus]."""

    s_minus: Number
    s_plus: Number
    c_minus: Number = 0
    c_plus: Number = 0

    def lower(self, q):
        return -self.s_minus * q - self.c_minus

    def upper(self, q):
        return self.s_plus * q + self.c_plus

    def __add__(self, other: "SlopeCert") -> "SlopeCert":
        return SlopeCert(self.s_minus + other.s_minus, self.s_plus + other.s_plus,
                         self.c_minus + other.c_minus, self.c_plus + other.c_plus)


@dataclass(frozen=True)
class FunctionCert(SupportCert):
    """Support bound given by two explicit functions of the q-exponent."""

    lower_fn: Callable[[Number], Number]
    upper_fn: Callable[[Number], Number]

    def lower(self, q):
        return self.lower_fn(q)

    def upper(self, q):
        return self.upper_fn(q)


@dataclass(frozen=True)
class GenusCert(SupportCert):
    """Support bound shared by every cleared genus of complex dimension d.

    Reaching ``y^(-k)`` needs k distinct modes of the rank-d bundles twisted
    by ``y^(-1) q^n``; the cheapest k of them cost ``T_d(k)`` in q-degree.
    The upper side mirrors this around ``d``.
    """

    d: int

    def reach(self, q: Number) -> int:
        if self.d == 0:
            return 0
        k, cost, n = 0, 0, 1
        while True:
            for _ in range(self.d):
                if cost + n > q:
                    return k
                cost += n
                k += 1
            n += 1

    def lower(self, q):
        return -self.reach(q)

    def upper(self, q):
        return self.d + self.reach(q)


# --------------------------------------------------------------------------
# QYSeries
# --------------------------------------------------------------------------

class QYSeries:
    """Truncated q-series with LocalizedLaurent coefficients.

    ``order`` is the largest q-exponent for which coefficients are asserted
    correct (``INF`` for exact finite series).  ``window`` restricts the
    assertion to y-exponents in ``[ymin, ymax]`` (ordinary units).
    """

    __slots__ = ("coeffs", "order", "window", "cert")

    def __init__(self, coeffs: Optional[Mapping] = None, order: Number = INF,
                 window: Optional[Tuple[Number, Number]] = None,
                 cert: Optional[SupportCert] = None, _trusted: bool = False):
        self.order = order if order == INF else _qexp(order)
        self.window = window
        self.cert = cert
        if _trusted:
            self.coeffs = dict(coeffs) if coeffs else {}
            return
        out: Dict[Number, LocalizedLaurent] = {}
        for p, c in (coeffs or {}).items():
            p = _qexp(p)
            if p > self.order:
                continue
            c = _as_ll(c)
            if window is not None:
                c = _clip(c, window)
            if c.terms:
                out[p] = c
        self.coeffs = out
        if cert is not None:
            self.validate_cert()

    # -- constructors -------------------------------------------------------
    @classmethod
    def one(cls, order: Number = INF) -> "QYSeries":
        return cls({0: LocalizedLaurent.const(1)}, order, _trusted=True)

    @classmethod
    def zero(cls, order: Number = INF) -> "QYSeries":
        return cls({}, order, _trusted=True)

    @classmethod
    def from_dict(cls, data: Mapping[Tuple[Number, Number], Number], order: Number = INF,
                  halves: bool = False) -> "QYSeries":
        """Build from ``{(q_exp, y_exp): c}``; y-exponents in ordinary units unless ``halves``."""
        polys: Dict[Number, Poly] = {}
        for (p, e), c in data.items():
            if not c:
                continue
            if halves:
                e2 = int(e)
            else:
                fe = Fraction(e) * 2
                if fe.denominator != 1:
                    raise GridError(f"y-exponent {e} is not a half-integer")
                e2 = int(fe)
            poly = polys.setdefault(_qexp(p), {})
            poly[(e2, 0)] = _num(poly.get((e2, 0), 0) + c)
        return cls({p: LocalizedLaurent(t) for p, t in polys.items()}, order)

    def validate_cert(self) -> None:
        for p, c in self.coeffs.items():
            if not c.terms:
                continue
            lo, hi = c.y_range()
            if self.window is not None:
                lo = max(lo, 2 * self.window[0])
                hi = min(hi, 2 * self.window[1])
                if lo > hi:
                    continue
            if Fraction(lo, 2) < self.cert.lower(p) or Fraction(hi, 2) > self.cert.upper(p):
                raise WindowError(f"coefficient of q^{p} violates its support certificate")

    # -- access -------------------------------------------------------------
    @property
    def trunc_order(self) -> Number:
        return self.order

    @property
    def slope_cert(self) -> Optional[SupportCert]:
        return self.cert

    def __getitem__(self, p) -> LocalizedLaurent:
        return self.coeffs.get(_qexp(p), LocalizedLaurent(_trusted=True))

    def exponents(self) -> List[Number]:
        return sorted(self.coeffs)

    def valuation(self) -> Number:
        return min(self.coeffs) if self.coeffs else INF

    def is_polynomial(self) -> bool:
        return all(c.is_polynomial() for c in self.coeffs.values())

    def is_zero(self) -> bool:
        return not self.coeffs

    def truncate(self, order: Number) -> "QYSeries":
        order = min(order, self.order)
        return QYSeries({p: c for p, c in self.coeffs.items() if p <= order}, order,
                        self.window, self.cert, _trusted=True)

    def coefficient(self, p, y) -> Number:
        e2 = Fraction(y) * 2
        return self[p].terms.get((int(e2), 0), 0)

    def to_dict(self) -> Dict[Tuple[Number, Fraction], Number]:
        out = {}
        for p, c in self.coeffs.items():
            if c.denom:
                raise NotDivisible("series has localized coefficients")
            for (e2, t2), v in c.terms.items():
                out[(p, _num(Fraction(e2, 2)))] = v
        return out

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self) -> "QYSeries":
        return QYSeries({p: -c for p, c in self.coeffs.items()}, self.order, self.window,
                        self.cert, _trusted=True)

    def __add__(self, other) -> "QYSeries":
        return add(self, _as_series(other))

    __radd__ = __add__

    def __sub__(self, other) -> "QYSeries":
        return add(self, -_as_series(other))

    def __rsub__(self, other) -> "QYSeries":
        return add(_as_series(other), -self)

    def __mul__(self, other) -> "QYSeries":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return QYSeries.zero(self.order)
            return QYSeries({p: c * other for p, c in self.coeffs.items()}, self.order,
                            self.window, self.cert, _trusted=True)
        if isinstance(other, LocalizedLaurent):
            return QYSeries({p: c * other for p, c in self.coeffs.items() if (c * other).terms},
                            self.order, self.window, None, _trusted=True)
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QYSeries":
        if n < 0:
            return inv(self) ** (-n)
        result = QYSeries.one()
        base = self
        while n:
            if n & 1:
                result = mul(result, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return result

    def shift(self, y: Number = 0, q: Number = 0, t: Number = 0) -> "QYSeries":
        """Multiply by the monomial ``y^y q^q t^t``."""
        y2, t2 = Fraction(y) * 2, Fraction(t) * 2
        if y2.denominator != 1 or t2.denominator != 1:
            raise GridError("monomial shift off the half-integer grid")
        window = None if self.window is None else (self.window[0] + y, self.window[1] + y)
        cert = None
        if isinstance(self.cert, SlopeCert) and q == 0:
            cert = SlopeCert(self.cert.s_minus, self.cert.s_plus,
                             self.cert.c_minus - y, self.cert.c_plus + y)
        return QYSeries({_qexp(p + q): c.shift(int(y2), int(t2)) for p, c in self.coeffs.items()},
                        self.order + q, window, cert, _trusted=True)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QYSeries):
            return NotImplemented
        return diff_monomial(self, other) is None

    def __repr__(self) -> str:
        return f"QYSeries(order={self.order}, {len(self.coeffs)} coefficients)"


def _as_series(x) -> QYSeries:
    if isinstance(x, QYSeries):
        return x
    return QYSeries({0: _as_ll(x)}, INF, _trusted=True)


def _clip(c: LocalizedLaurent, window: Tuple[Number, Number]) -> LocalizedLaurent:
    if c.denom:
        raise WindowError("windowed coefficients must be denominator-free")
    lo, hi = 2 * window[0], 2 * window[1]
    return LocalizedLaurent({e: v for e, v in c.terms.items() if lo <= e[0] <= hi}, (), _trusted=True)


def make(terms: Mapping, trunc_order: Number = INF, grid: int = 1) -> QYSeries:
    """Normalized series from ``{q_exp: coefficient}``; q-exponents must lie on ``(1/grid)Z``."""
    out = {}
    for p, c in terms.items():
        fp = Fraction(p)
        if (fp * grid).denominator != 1:
            raise GridError(f"q-exponent {p} is off the 1/{grid} grid")
        out[fp] = c
    if out and trunc_order != INF and trunc_order < min(out):
        raise GridError("trunc_order below the smallest exponent")
    return QYSeries(out, trunc_order)


def add(a: QYSeries, b: QYSeries) -> QYSeries:
    order = min(a.order, b.order)
    window = _meet(a.window, b.window)
    out = dict()
    for p in set(a.coeffs) | set(b.coeffs):
        if p > order:
            continue
        ca, cb = a.coeffs.get(p), b.coeffs.get(p)
        c = ca + cb if (ca is not None and cb is not None) else (ca if cb is None else cb)
        if window is not None:
            c = _clip(c, window)
        if c.terms:
            out[p] = c
    cert = None
    if a.cert is not None and b.cert is not None and isinstance(a.cert, SlopeCert) and isinstance(b.cert, SlopeCert):
        cert = SlopeCert(max(a.cert.s_minus, b.cert.s_minus), max(a.cert.s_plus, b.cert.s_plus),
                         max(a.cert.c_minus, b.cert.c_minus), max(a.cert.c_plus, b.cert.c_plus))
    return QYSeries(out, order, window, cert, _trusted=True)


def _meet(wa, wb):
    if wa is None:
        return wb
    if wb is None:
        return wa
    return (max(wa[0], wb[0]), min(wa[1], wb[1]))


def _guarded_window(a: QYSeries, b: QYSeries, order: Number):
    """Window on which the product of (possibly windowed) a and b is exact."""
    if a.window is None and b.window is None:
        return None
    for s in (a, b):
        if s.cert is None:
            raise WindowError("windowed product needs support certificates on both operands")
    qmax = order if order != INF else max(list(a.coeffs) + list(b.coeffs) + [0])
    lo, hi = -INF, INF
    if a.window is not None:
        hi = min(hi, a.window[1] + b.cert.min_lower(qmax))
        lo = max(lo, a.window[0] + b.cert.max_upper(qmax))
    if b.window is not None:
        hi = min(hi, b.window[1] + a.cert.min_lower(qmax))
        lo = max(lo, b.window[0] + a.cert.max_upper(qmax))
    if lo > hi:
        raise WindowError("guard band exceeds the window; enlarge y_window")
    return (lo, hi)


def mul(a: QYSeries, b: QYSeries) -> QYSeries:
    va, vb = a.valuation(), b.valuation()
    if va == INF or vb == INF:
        return QYSeries.zero(min(a.order + (vb if vb != INF else 0), b.order + (va if va != INF else 0)))
    order = min(a.order + vb, b.order + va)
    window = _guarded_window(a, b, order)
    acc: Dict[Number, LocalizedLaurent] = {}
    fast = a.is_polynomial() and b.is_polynomial()
    dense = _dense_product(a, b, order) if fast else None
    if dense is not None:
        acc = dense
    elif fast:
        polys: Dict[Number, Poly] = {}
        for p, ca in a.coeffs.items():
            for r, cb in b.coeffs.items():
                s = p + r
                if s > order:
                    continue
                prod = _pmul(ca.terms, cb.terms)
                cur = polys.get(s)
                polys[s] = prod if cur is None else _padd(cur, prod)
        acc = {p: LocalizedLaurent(t, (), _trusted=True) for p, t in polys.items()}
    else:
        for p, ca in a.coeffs.items():
            for r, cb in b.coeffs.items():
                s = p + r
                if s > order:
                    continue
                prod = ca * cb
                acc[s] = prod if s not in acc else acc[s] + prod
    out = {}
    for p, c in acc.items():
        p = _qexp(p)
        if window is not None:
            c = _clip(c, window)
        if c.terms:
            out[p] = c
    cert = None
    if a.cert is not None and b.cert is not None and isinstance(a.cert, SlopeCert) and isinstance(b.cert, SlopeCert):
        cert = a.cert + b.cert
    return QYSeries(out, order, window, cert, _trusted=True)


_DENSE_THRESHOLD = 4000


def _to_dense(a: QYSeries, qmax: int):
    """(array, y-offset in halves) for an integer, t-free, integer-q series."""
    import numpy as np
    lo, hi = None, None
    for p, c in a.coeffs.items():
        if p > qmax:
            continue
        if not isinstance(p, int) or p < 0:
            return None
        for (e2, t2), v in c.terms.items():
            if t2 or not isinstance(v, int):
                return None
            lo = e2 if lo is None or e2 < lo else lo
            hi = e2 if hi is None or e2 > hi else hi
    if lo is None:
        return None
    arr = np.zeros((qmax + 1, hi - lo + 1), dtype=object)
    for p, c in a.coeffs.items():
        if p <= qmax:
            for (e2, _), v in c.terms.items():
                arr[p, e2 - lo] = v
    return arr, lo


def _dense_product(a: QYSeries, b: QYSeries, order: Number):
    from . import kernels
    import numpy as np
    if order == INF:
        return None
    work = sum(len(c.terms) for c in a.coeffs.values()) * sum(len(c.terms) for c in b.coeffs.values())
    if work < _DENSE_THRESHOLD:
        return None
    qmax = int(math.floor(order))
    da, db = _to_dense(a, qmax), _to_dense(b, qmax)
    if da is None or db is None:
        return None
    (arr_a, lo_a), (arr_b, lo_b) = da, db
    if not kernels.fits_int64(arr_a, arr_b):
        return None
    prod = kernels.conv2d_trunc(arr_a.astype(np.int64), arr_b.astype(np.int64), qmax)
    base = lo_a + lo_b
    out = {}
    for p in range(prod.shape[0]):
        row = prod[p]
        nz = np.nonzero(row)[0]
        if len(nz):
            out[p] = LocalizedLaurent({(base + int(k), 0): int(row[k]) for k in nz}, (), _trusted=True)
    return out


def _grid_unit(exps: Iterable[Number]) -> Fraction:
    den = 1
    for p in exps:
        den = math.lcm(den, Fraction(p).denominator)
    return Fraction(1, den)


def inv(a: QYSeries) -> QYSeries:
    """Multiplicative inverse up to the valid truncation order."""
    if a.window is not None:
        raise WindowError("inversion of windowed series is not supported")
    v = a.valuation()
    if v == INF:
        raise NotInvertible("zero series")
    lead_inv = a.coeffs[v].inv()
    if a.order == INF and len(a.coeffs) == 1:
        return QYSeries({-v: lead_inv}, INF, _trusted=True)
    order = a.order - 2 * v
    if order == INF:
        raise NotInvertible("inverse of an exact non-monomial series needs a truncation order")
    g = _grid_unit(list(a.coeffs) + [order])
    steps = int((order + v) / g)
    # a = q^v (c0 + c1 q^g + ...); b = q^-v (d0 + d1 q^g + ...)
    ca = {int((p - v) / g): c for p, c in a.coeffs.items()}
    d: List[LocalizedLaurent] = [lead_inv]
    for k in range(1, steps + 1):
        s = LocalizedLaurent(_trusted=True)
        for i in range(1, k + 1):
            ci = ca.get(i)
            if ci is not None and d[k - i].terms:
                s = s + ci * d[k - i]
        d.append(-(s * lead_inv))
    return QYSeries({_qexp(-v + k * g): c for k, c in enumerate(d) if c.terms}, order, _trusted=True)


def exact_div(a: QYSeries, b: QYSeries) -> QYSeries:
    """Quotient a/b, required to have Laurent-polynomial coefficients."""
    qt = mul(a, inv(b))
    for p, c in qt.coeffs.items():
        if c.denom:
            raise NotDivisible(f"quotient coefficient of q^{p} keeps denominator {c.denom}")
    back = mul(qt, b)
    bad = diff_monomial(back.truncate(min(back.order, a.order)), a.truncate(min(back.order, a.order)))
    if bad is not None:
        raise NotDivisible(f"remainder at {bad}")
    return qt


def expand_binomial_inverse(c: Number, s: Number, order: Number) -> QYSeries:
    """Expansion of ``1/(1 - y^c q^s)`` around q = 0.

    ``s > 0`` gives the geometric series, ``s < 0`` the expansion of
    ``-y^{-c} q^{-s} / (1 - y^{-c} q^{-s})``, and ``s = 0`` a symbolic
    denominator.
    """
    c2 = Fraction(c) * 2
    if c2.denominator != 1:
        raise GridError("binomial exponent off the half-integer grid")
    c2 = int(c2)
    if s == 0:
        return QYSeries({0: LocalizedLaurent.binomial_inverse(c2)}, order, _trusted=True)
    out = {}
    if s > 0:
        j = 0
        while s * j <= order:
            out[_qexp(s * j)] = LocalizedLaurent.mono(1, c2 * j)
            j += 1
    else:
        j = 1
        while -s * j <= order:
            out[_qexp(-s * j)] = LocalizedLaurent.mono(-1, -c2 * j)
            j += 1
    return QYSeries(out, order, _trusted=True)


def _cert_lower_after(cert: SupportCert, order: Number, j: int) -> Number:
    """Least q-exponent that an unknown term (q-exponent > order) can reach under y -> y q^j."""
    g = 1
    start = int(math.floor(order)) + 1
    best = INF
    # the bound f + j*e is monotone for the certificates used here past a short horizon
    for f in range(start, start + 64 * g):
        e = cert.lower(f) if j > 0 else cert.upper(f)
        best = min(best, f + j * e)
    return best


def subst_y_qshift(a: QYSeries, j: int) -> QYSeries:
    """Substitute y -> y q^j.  Needs denominator-free coefficients.

    For truncated input the unknown tail is controlled by ``a.cert``; the
    result order is the largest q-exponent below anything the tail can reach.
    """
    if not a.is_polynomial():
        raise WindowError("y -> yq needs denominator-free coefficients")
    if a.window is not None:
        raise WindowError("y -> yq on a windowed series is not supported")
    out: Dict[Number, Poly] = {}
    for p, c in a.coeffs.items():
        for (e2, t2), v in c.terms.items():
            np_ = _qexp(p + Fraction(e2, 2) * j)
            poly = out.setdefault(np_, {})
            poly[(e2, t2)] = _num(poly.get((e2, t2), 0) + v)
    if a.order == INF:
        order = INF
    else:
        if a.cert is None:
            raise WindowError("y -> yq on a truncated series needs a support certificate")
        reach = _cert_lower_after(a.cert, a.order, j)
        order = math.ceil(reach) - 1 if reach != INF else INF
        if isinstance(a.cert, SlopeCert):
            s = a.cert.s_minus if j > 0 else a.cert.s_plus
            if s * abs(j) >= 1:
                raise WindowError("slope certificate too weak for y -> yq")
    coeffs = {p: LocalizedLaurent(t) for p, t in out.items() if p <= order}
    return QYSeries({p: c for p, c in coeffs.items() if c.terms}, order, _trusted=True)


def subst_y_invert(a: QYSeries) -> QYSeries:
    window = None if a.window is None else (-a.window[1], -a.window[0])
    cert = None
    if isinstance(a.cert, SlopeCert):
        cert = SlopeCert(a.cert.s_plus, a.cert.s_minus, a.cert.c_plus, a.cert.c_minus)
    elif isinstance(a.cert, GenusCert):
        cert = _ReflectedCert(a.cert)
    return QYSeries({p: c.subst_y_invert() for p, c in a.coeffs.items()}, a.order, window, cert,
                    _trusted=True)


@dataclass(frozen=True)
class _ReflectedCert(SupportCert):
    base: SupportCert

    def lower(self, q):
        return -self.base.upper(q)

    def upper(self, q):
        return -self.base.lower(q)


def eval_y(a: QYSeries, v: int) -> QYSeries:
    """Substitute y = v (v = +1 or -1), giving a series with rational coefficients."""
    out = {}
    for p, c in a.coeffs.items():
        val = c.eval_y(v)
        if val:
            out[p] = LocalizedLaurent.const(val)
    return QYSeries(out, a.order, _trusted=True)


def diff_monomial(a: QYSeries, b: QYSeries, order: Optional[Number] = None):
    """First monomial (q, y-halves, t-halves) where a and b differ up to ``order``; None if equal."""
    if order is None:
        order = min(a.order, b.order)
    for p in sorted(set(a.coeffs) | set(b.coeffs)):
        if p > order:
            break
        ca, cb = a[p], b[p]
        if ca == cb:
            continue
        if ca.denom or cb.denom:
            return (p, None, None)
        d = _padd(ca.terms, cb.terms, -1)
        e = min(d, key=lambda k: (k[1], k[0]))
        return (p, e[0], e[1])
    return None


def qseries_coeff_list(a: QYSeries, order: int) -> List[Number]:
    """Rational coefficients of a y-free series as a list indexed by q-exponent."""
    out = []
    for p in range(order + 1):
        c = a[p]
        if not c.terms:
            out.append(0)
            continue
        if c.denom or set(c.terms) != {(0, 0)}:
            raise ValueError(f"coefficient of q^{p} is not a constant")
        out.append(c.terms[(0, 0)])
    return out


# --------------------------------------------------------------------------
# Genus
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Genus:
    """A cleared elliptic genus ``y^(d/2) Ell`` of a d-dimensional space."""

    d: int
    body: QYSeries
    label: str = ""
    calabi_yau: bool = False

    def __post_init__(self):
        for p, c in self.body.coeffs.items():
            if c.denom:
                raise SeriesError(f"genus body has a denominator at q^{p}")
            if Fraction(p).denominator != 1:
                raise SeriesError("genus body must have integer q-exponents")
            for (e2, t2) in c.terms:
                if e2 % 2 or t2:
                    raise SeriesError("genus body must have integer y-exponents")
        c0 = self.body[0]
        if c0.terms:
            lo, hi = c0.y_range()
            if lo < 0 or hi > 2 * self.d:
                raise SeriesError("q^0 coefficient of a genus must have y-exponents in [0, d]")
        if self.body.cert is None:
            object.__setattr__(self, "body", QYSeries(self.body.coeffs, self.body.order, None,
                                                     GenusCert(self.d), _trusted=True))

    @property
    def order(self) -> Number:
        return self.body.order

    def slice(self, p: int) -> List[Number]:
        """Coefficients of y^0..y^d at q^p (q^0 gives the Hodge slice)."""
        c = self.body[p]
        lo = min([0] + [e[0] // 2 for e in c.terms])
        hi = max([self.d] + [e[0] // 2 for e in c.terms])
        return [c.terms.get((2 * e, 0), 0) for e in range(lo, hi + 1)]

    def euler_series(self) -> QYSeries:
        return eval_y(self.body, 1)

    def truncate(self, order: Number) -> "Genus":
        return Genus(self.d, self.body.truncate(order), self.label, self.calabi_yau)


def genus_from_dict(d: int, data: Mapping[Tuple[int, int], Number], order: int, label: str = "",
                    calabi_yau: bool = False) -> Genus:
    return Genus(d, QYSeries.from_dict(data, order), label, calabi_yau)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def _fmt_q(p: Number) -> str:
    p = Fraction(p)
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def format_series(a: QYSeries) -> str:
    """One line per q-exponent: ``q^<a>: <c> y^<e> + ...``."""
    lines = []
    for p in a.exponents():
        c = a.coeffs[p]
        parts = []
        for (e2, t2), v in c.sorted_terms():
            s = f"{_fmt_num(v)} y^{_pfmt_exp(e2)}"
            if t2:
                s += f" t^{_pfmt_exp(t2)}"
            parts.append(s)
        body = " + ".join(parts)
        if c.denom:
            body = f"[{body}] / " + "".join(
                f"(1 - y^{_pfmt_exp(v[0])}" + (f" t^{_pfmt_exp(v[1])}" if v[1] else "") + ")"
                for v in c.denom)
        lines.append(f"q^{_fmt_q(p)}: {body}")
    return "\n".join(lines)


def series_to_json(a: QYSeries) -> dict:
    out = []
    for p in a.exponents():
        c = a.coeffs[p]
        entry = {"q": _fmt_q(p),
                 "terms": [[_pfmt_exp(e2), _fmt_num(v)] + ([_pfmt_exp(t2)] if t2 else [])
                           for (e2, t2), v in c.sorted_terms()]}
        if c.denom:
            entry["denom"] = [[_pfmt_exp(v[0]), _pfmt_exp(v[1])] for v in c.denom]
        out.append(entry)
    order = None if a.order == INF else _fmt_q(a.order)
    return {"order": order, "coeffs": out}


def _parse_half(s: str) -> int:
    f = Fraction(s) * 2
    if f.denominator != 1:
        raise GridError(f"exponent {s} off the half-integer grid")
    return int(f)


def series_from_json(data: Mapping) -> QYSeries:
    coeffs = {}
    for entry in data["coeffs"]:
        terms = {}
        for item in entry["terms"]:
            t2 = _parse_half(item[2]) if len(item) > 2 else 0
            terms[(_parse_half(item[0]), t2)] = _num(Fraction(item[1]))
        denom = [(_parse_half(a), _parse_half(b)) for a, b in entry.get("denom", [])]
        coeffs[Fraction(entry["q"])] = LocalizedLaurent(terms, denom)
    order = INF if data["order"] is None else Fraction(data["order"])
    return QYSeries(coeffs, order)


def genus_to_json(g: Genus) -> dict:
    return {"dimension": g.d, "label": g.label, "calabi_yau": g.calabi_yau, "series": series_to_json(g.body)}


def genus_from_json(data: Mapping) -> Genus:
    return Genus(int(data["dimension"]), series_from_json(data["series"]), data.get("label", ""),
                 bool(data.get("calabi_yau", False)))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
