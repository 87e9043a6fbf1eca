"""Weight-zero weak Jacobi forms and the structure of Calabi-Yau genera.

Forms are stored in cleared form ``y^m phi`` for index ``m``, so that a
genus body of dimension d sits next to index-d/2 forms without any
half-integer bookkeeping.  The ring is generated over the Eisenstein series
E4, E6 by

* ``a = -theta(z)^2 / eta^6`` (weight -2, index 1),
* ``b = Ell(K3) / 2`` (weight 0, index 1),

and odd index needs one extra factor ``f = theta(2z)/theta(z)`` of index 3/2.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from . import linalg
from . import series_core as sc
from .chern_engine import HypersurfaceSpec, ell_hypersurface_projective, genus_product, point_genus
from .series_core import FunctionCert, Genus, GenusCert, LocalizedLaurent as L, QYSeries, SupportCert
from .theta_forms import eisenstein, eta_series, f_series, theta_cert, theta_reduced


class Inconsistent(ValueError):
    """The series is not in the span of the basis."""


class UnderDetermined(ValueError):
    """The basis is not linearly independent at the available order."""


class PalindromyFailure(ValueError):
    pass


class NoKernel(ValueError):
    """The q^0 restriction is injective in this dimension."""


# --------------------------------------------------------------------------
# Support certificates for products
# --------------------------------------------------------------------------

_ZERO_CERT = FunctionCert(lambda f: 0, lambda f: 0)


def _shift_cert(c: SupportCert, y: sc.Number) -> SupportCert:
    return FunctionCert(lambda f: c.lower(f) + y, lambda f: c.upper(f) + y)


def product_cert(c1: SupportCert, c2: SupportCert) -> SupportCert:
    """Support bound of a product: extremes over splittings of the q-degree."""

    @lru_cache(maxsize=None)
    def lo(n: int):
        return min(c1.lower(j) + c2.lower(n - j) for j in range(n + 1))

    @lru_cache(maxsize=None)
    def hi(n: int):
        return max(c1.upper(j) + c2.upper(n - j) for j in range(n + 1))

    def floor(f):
        return int(Fraction(f).numerator // Fraction(f).denominator)

    return FunctionCert(lambda f: lo(floor(f)), lambda f: hi(floor(f)))


def _with_cert(s: QYSeries, cert: SupportCert) -> QYSeries:
    return QYSeries(s.coeffs, s.order, s.window, cert)


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class JacobiBasisElement:
    exponents: Tuple[int, int, int, int]  # powers of E4, E6, a, b
    f_flag: bool
    expansion: QYSeries  # cleared: y^index * phi

    @property
    def weight(self) -> int:
        al, be, ga, _ = self.exponents
        return 4 * al + 6 * be - 2 * ga

    @property
    def index(self) -> Fraction:
        _, _, ga, de = self.exponents
        return Fraction(ga + de) + (Fraction(3, 2) if self.f_flag else 0)

    def centered(self) -> QYSeries:
        return self.expansion.shift(y=-self.index)

    def name(self) -> str:
        parts = []
        for sym, k in zip(("E4", "E6", "a", "b"), self.exponents):
            if k == 1:
                parts.append(sym)
            elif k > 1:
                parts.append(f"{sym}^{k}")
        if self.f_flag:
            parts.append("f")
        return "*".join(parts) or "1"


@lru_cache(maxsize=None)
def _a_series(order: int) -> QYSeries:
    th = theta_reduced(order).body
    eta = eta_series(order).body
    # -theta^2/eta^6: the prefactors q^(1/4) (-i)^2 cancel against q^(6/24) and the sign
    centered = sc.exact_div(th ** 2, eta ** 6)
    cert = _shift_cert(product_cert(theta_cert(), theta_cert()), 1)
    return _with_cert(centered.shift(y=1), cert)


@lru_cache(maxsize=None)
def _b_series(order: int) -> QYSeries:
    k3 = ell_hypersurface_projective(HypersurfaceSpec(3, 4), order)
    half = QYSeries({p: c * Fraction(1, 2) for p, c in k3.body.coeffs.items()}, k3.body.order)
    return _with_cert(half, GenusCert(2))


@lru_cache(maxsize=None)
def _f_series(order: int) -> QYSeries:
    # f = -Ell(quintic)/100, so the dimension-3 genus bound applies
    return _with_cert(f_series(order).shift(y=Fraction(3, 2)), GenusCert(3))


def _eis(k: int, order: int) -> QYSeries:
    return _with_cert(eisenstein(k, order), _ZERO_CERT)


def phi_m21(order: int, window=None) -> JacobiBasisElement:
    """a = -theta^2/eta^6, weight -2 and index 1."""
    return JacobiBasisElement((0, 0, 1, 0), False, _a_series(order))


def phi_01(order: int, window=None) -> JacobiBasisElement:
    """b = Ell(K3)/2, weight 0 and index 1."""
    return JacobiBasisElement((0, 0, 0, 1), False, _b_series(order))


def phi_f(order: int) -> JacobiBasisElement:
    """f = theta(2z)/theta(z), index 3/2."""
    return JacobiBasisElement((0, 0, 0, 0), True, _f_series(order))


def elliptic_law(s: QYSeries, index: sc.Number) -> Tuple[bool, sc.Number]:
    """Cleared index-m law ``s(yq) = (-1)^(2m) y^(-2m) s(y)``; returns (holds, overlap order)."""
    twice = int(2 * Fraction(index))
    shifted = sc.subst_y_qshift(s, 1)
    target = (s * ((-1) ** twice)).shift(y=-twice)
    order = min(shifted.order, target.order)
    return sc.diff_monomial(shifted, target, order) is None, order


# --------------------------------------------------------------------------
# Dimensions and bases
# --------------------------------------------------------------------------

def dim_weak_jacobi(k: int) -> int:
    """Number of (alpha, beta) >= 0 with 2 alpha + 3 beta <= k."""
    if k < 0:
        return 0
    return sum(1 for be in range(k // 3 + 1) for _ in range(0, (k - 3 * be) // 2 + 1))


def _monomials(k: int) -> List[Tuple[int, int, int, int]]:
    out = []
    for ga in range(k + 1):
        for be in range(ga // 3 + 1):
            rest = 2 * ga - 6 * be
            if rest % 4 == 0:
                out.append((rest // 4, be, ga, k - ga))
    return out


def _power(s: QYSeries, cert: SupportCert, n: int, one: QYSeries) -> Tuple[QYSeries, SupportCert]:
    out, c = one, _ZERO_CERT
    for _ in range(n):
        out = sc.mul(out, s)
        c = product_cert(c, cert)
    return out, c


@lru_cache(maxsize=None)
def _basis_cached(d: int, order: int) -> Tuple[JacobiBasisElement, ...]:
    if d % 2:
        if d < 3:
            return ()
        f = _f_series(order)
        return tuple(JacobiBasisElement(e.exponents, True,
                                        _with_cert(sc.mul(e.expansion, f),
                                                   product_cert(e.expansion.cert, f.cert)))
                     for e in _basis_cached(d - 3, order))
    k = d // 2
    gens = [(_eis(4, order), _ZERO_CERT), (_eis(6, order), _ZERO_CERT),
            (_a_series(order), _a_series(order).cert), (_b_series(order), GenusCert(2))]
    one = QYSeries.one(order)
    out = []
    for ex in _monomials(k):
        s, c = one, _ZERO_CERT
        for (g, gc), n in zip(gens, ex):
            p, pc = _power(g, gc, n, one)
            s, c = sc.mul(s, p), product_cert(c, pc)
        out.append(JacobiBasisElement(ex, False, _with_cert(s.truncate(order), c)))
    return tuple(out)


def basis(d: int, order: int, window=None) -> List[JacobiBasisElement]:
    """Weight-0 weak Jacobi forms of index d/2, in cleared form to q^order."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return list(_basis_cached(d, order))


# --------------------------------------------------------------------------
# Linear algebra on coefficients
# --------------------------------------------------------------------------

def _coefficient_vector(s: QYSeries, keys: Sequence[Tuple[int, int]]) -> List[Fraction]:
    return [Fraction(s[p].terms.get((e2, 0), 0)) for p, e2 in keys]


def _keys(series: Sequence[QYSeries], order: int) -> List[Tuple[int, int]]:
    keys = set()
    for s in series:
        for p, c in s.coeffs.items():
            if p <= order:
                if c.denom:
                    raise sc.SeriesError("localized coefficient in a Jacobi computation")
                for (e2, t2) in c.terms:
                    keys.add((int(p), e2))
    return sorted(keys)


@dataclass(frozen=True)
class Decomposition:
    dimension: int
    basis: List[str]
    coefficients: List[Fraction]
    verified_to_q: int

    def to_json(self) -> dict:
        return {"dimension": self.dimension, "basis": self.basis,
                "coefficients": [str(c) for c in self.coefficients], "verified_to_q": self.verified_to_q}


def decompose(g: Genus, solve_order: Optional[int] = None) -> Decomposition:
    """Coefficients of g in the basis of index d/2.

    The system is solved on the q-coefficients up to ``solve_order`` (the
    lowest order at which the basis is independent by default) and then
    checked against every computed coefficient.
    """
    order = int(g.order)
    elems = basis(g.d, order)
    if not elems:
        if any(c.terms for c in g.body.coeffs.values()):
            raise Inconsistent("no forms of this index, but the genus is nonzero")
        return Decomposition(g.d, [], [], order)
    chosen = None
    for so in ([solve_order] if solve_order is not None else range(order + 1)):
        keys = _keys([e.expansion for e in elems], so)
        rows = [_coefficient_vector(e.expansion, keys) for e in elems]
        if linalg.rank(rows) == len(elems):
            chosen = so
            break
    if chosen is None:
        raise UnderDetermined(f"basis of index {Fraction(g.d, 2)} is dependent up to q^{order}")
    keys = _keys([e.expansion for e in elems] + [g.body], chosen)
    cols = linalg.transpose([_coefficient_vector(e.expansion, keys) for e in elems])
    rhs = _coefficient_vector(g.body, keys)
    sol = linalg.solve(cols, rhs)
    if sol is None:
        raise Inconsistent(f"genus is not in the span at q^{chosen}")
    combo = QYSeries.zero(order)
    for c, e in zip(sol, elems):
        combo = combo + e.expansion * c
    diff = sc.diff_monomial(combo, g.body, order)
    if diff is not None:
        raise Inconsistent(f"decomposition fails at q^{diff[0]} y^{Fraction(diff[1], 2)}")
    return Decomposition(g.d, [e.name() for e in elems], list(sol), order)


def span_check(d: int, genera: Sequence[Genus]) -> Dict[str, int]:
    """Exact rank of the genera's coefficient matrix next to the space dimension."""
    if any(g.d != d for g in genera):
        raise ValueError("all genera must have dimension d")
    order = int(min(g.order for g in genera))
    keys = _keys([g.body for g in genera], order)
    rows = [_coefficient_vector(g.body, keys) for g in genera]
    k = d // 2 if d % 2 == 0 else (d - 3) // 2
    return {"dimension": d, "rank": linalg.rank(rows), "forms": dim_weak_jacobi(k), "verified_to_q": order}


# --------------------------------------------------------------------------
# Hodge slices and the q^0 restriction
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HodgeSlice:
    """q^0 coefficients of the cleared body; entry p is sum_q (-1)^(p+q) h^(p,q)."""

    d: int
    chi: Tuple[int, ...]

    def to_json(self) -> dict:
        return {"dimension": self.d, "chi": list(self.chi)}


def hodge_slice(g: Genus) -> HodgeSlice:
    c0 = g.body[0]
    chi = tuple(int(c0.terms.get((2 * p, 0), 0)) for p in range(g.d + 1))
    if chi != chi[::-1]:
        raise PalindromyFailure(f"q^0 slice {chi} is not palindromic")
    if g.calabi_yau and g.d % 2 and chi[0] != 0:
        raise PalindromyFailure("odd-dimensional Calabi-Yau slice must start with 0")
    return HodgeSlice(g.d, chi)


@dataclass(frozen=True)
class RankAnalysis:
    d: int
    dim_forms: int
    rank_q0: int

    @property
    def determined(self) -> bool:
        return self.rank_q0 == self.dim_forms

    def to_json(self) -> dict:
        return {"dimension": self.d, "dim_forms": self.dim_forms, "rank_q0": self.rank_q0,
                "determined": self.determined}


def q0_rank_analysis(d: int) -> RankAnalysis:
    """Rank of the restriction of the index-d/2 forms to q = 0."""
    elems = basis(d, 0)
    keys = _keys([e.expansion for e in elems], 0)
    rows = [_coefficient_vector(e.expansion, keys) for e in elems]
    return RankAnalysis(d, len(elems), linalg.rank(rows) if rows else 0)


# --------------------------------------------------------------------------
# Manifolds with equal Hodge slices and different genera
# --------------------------------------------------------------------------

_FACTORS = (("K3", 2, (3, 4)), ("X6", 4, (5, 6)), ("X8", 6, (7, 8)))


def _product_words(d: int, odd_seed: bool) -> List[Tuple[str, ...]]:
    """Multisets of factors with total dimension d, in a fixed order."""
    names = [n for n, _, _ in _FACTORS]
    dims = {n: k for n, k, _ in _FACTORS}
    out = []

    def rec(start: int, left: int, word: Tuple[str, ...]):
        if left == 0:
            out.append(word)
            return
        for i in range(start, len(names)):
            if dims[names[i]] <= left:
                rec(i, left - dims[names[i]], word + (names[i],))

    rec(0, d - 3 if odd_seed else d, ("Q",) if odd_seed else ())
    return out


@dataclass(frozen=True)
class DegeneratePair:
    d: int
    words: List[str]
    kernel: List[int]
    positive: List[Tuple[int, str]]
    negative: List[Tuple[int, str]]
    q0_slice: Tuple[int, ...]
    q1_slice: Dict[int, int]

    def to_json(self) -> dict:
        return {"dimension": self.d, "products": self.words, "kernel": self.kernel,
                "positive": [[c, w] for c, w in self.positive],
                "negative": [[c, w] for c, w in self.negative],
                "q0_slice": list(self.q0_slice), "q1_slice": {str(k): v for k, v in sorted(self.q1_slice.items())}}


def _factor_genus(name: str, order: int) -> Genus:
    specs = {n: s for n, _, s in _FACTORS}
    specs["Q"] = (4, 5)
    n, k = specs[name]
    g = ell_hypersurface_projective(HypersurfaceSpec(n, k), order)
    return Genus(g.d, g.body, name, True)


def chi_degenerate_pair(d: int, order: int = 1) -> DegeneratePair:
    """Integer combination of products of K3, X6, X8 (and the quintic for odd d)
    whose q^0 slice vanishes but whose genus does not."""
    words = _product_words(d, d % 2 == 1)
    if not words:
        raise NoKernel(f"no products of dimension {d}")
    cache = {name: _factor_genus(name, order) for name in ("K3", "X6", "X8", "Q")}
    genera = []
    for w in words:
        g = point_genus(order)
        for name in w:
            g = genus_product(g, cache[name])
        genera.append(g)
    slices = [[Fraction(c) for c in hodge_slice(g).chi] for g in genera]
    kern = linalg.nullspace(linalg.transpose(slices), len(genera))
    for vec in kern:
        ints = linalg.primitive_integer(vec)
        q1: Dict[int, int] = {}
        for c, g in zip(ints, genera):
            for (e2, _), v in g.body[1].terms.items():
                q1[e2 // 2] = q1.get(e2 // 2, 0) + c * int(v)
        q1 = {k: v for k, v in q1.items() if v}
        if q1:
            q0 = [0] * (d + 1)
            for c, g in zip(ints, genera):
                for p, v in enumerate(hodge_slice(g).chi):
                    q0[p] += c * v
            labels = ["x".join(w) for w in words]
            pos = [(c, lab) for c, lab in zip(ints, labels) if c > 0]
            neg = [(-c, lab) for c, lab in zip(ints, labels) if c < 0]
            return DegeneratePair(d, labels, ints, pos, neg, tuple(q0), q1)
    raise NoKernel(f"q^0 restriction is injective on products of dimension {d}")
