"""Elliptic genera of complete toric varieties (smooth or Gorenstein).

For every character m the signed sum over all cones of the fan (the zero
cone included) of ``sum_{n in C} y^(deg.n) q^(m.n)`` is a rational function;
expanded around q = 0 and multiplied by ``(1 - y)^d`` it becomes a Laurent
polynomial.  Only finitely many m contribute below a given q-order; the m
are enumerated in shells ``max_rays |m.n|`` and the last shells must vanish.
"""
from __future__ import annotations

import cmath
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Dict, List, Optional, Sequence, Tuple

from . import intpoly, linalg
from . import series_core as sc
from .series_core import Genus, LocalizedLaurent, QYSeries
from .theta_forms import NumericPoint, g_numeric, g_series, g_unit_series, theta_numeric
from .toric_core import Fan, NotGorenstein, box_elements

L_ = LocalizedLaurent


class StabilizationFailure(RuntimeError):
    """Characters beyond the enumeration bound still contribute."""


class NearSingular(ValueError):
    """A numeric point sits too close to a theta zero."""


class BijectionFailure(AssertionError):
    pass


@dataclass(frozen=True)
class EnumerationPlan:
    q_order: int = 5
    y_window: int = 0
    m_bound: Optional[int] = None
    stabilization_shells: int = 2
    workers: int = 1

    def __post_init__(self):
        if self.q_order < 0 or self.stabilization_shells < 1:
            raise ValueError("q_order >= 0 and stabilization_shells >= 1 required")

    @property
    def bound(self) -> int:
        return self.m_bound if self.m_bound is not None else 3 * self.q_order


def default_workers() -> int:
    raw = os.environ.get("ELLGENUS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# Fan preprocessing
# --------------------------------------------------------------------------

@dataclass
class _ConeData:
    rays: Tuple[int, ...]
    sign: int
    boxes: List[Tuple[Tuple[Fraction, ...], int]]  # (coordinates, deg . b)


def _prepare(fan: Fan) -> Tuple[List[_ConeData], int]:
    if not fan.gorenstein:
        raise NotGorenstein("the genus needs a Gorenstein (or smooth) fan")
    d = fan.rank
    cones = []
    scale = 1
    for c in fan.cones:
        if c:
            box = box_elements([fan.rays[i] for i in c])
            boxes = []
            for coords in box.coords:
                degb = sum(coords)
                if Fraction(degb).denominator != 1:
                    raise NotGorenstein("deg is not integral on a box point")
                boxes.append((tuple(coords), int(degb)))
                for x in coords:
                    scale = lcm(scale, x.denominator)
        else:
            boxes = [((), 0)]
        cones.append(_ConeData(c, (-1) ** (d - len(c)), boxes))
    # faces of a simplicial (d-1)-sphere plus the empty face: the signed count is 1
    if sum(cd.sign for cd in cones) != 1:
        raise AssertionError("cone inclusion-exclusion does not match a sphere")
    return cones, scale


def _factor(a: int, c: Fraction, qmax_scaled: int, L: int) -> Dict[Tuple[int, int], int]:
    """q^(c a) / (1 - y q^a) expanded at q = 0, for a != 0 (scaled exponents)."""
    out = {}
    if a > 0:
        j = 0
        while True:
            p = (c + j) * a * L
            if p > qmax_scaled:
                break
            out[(int(p), j * L)] = 1
            j += 1
    else:
        A = -a
        j = 1
        while True:
            p = (j - c) * A * L
            if p > qmax_scaled:
                break
            out[(int(p), -j * L)] = -1
            j += 1
    return out


def _per_m(m: Sequence[int], fan: Fan, cones: List[_ConeData], Q: int, L: int, yval=None):
    """Cone sum for one character, times (1 - y)^d, as a scaled int polynomial.

    With ``yval = -1`` the same sum is evaluated at y = -1 (rational
    coefficients, no (1 - y) factor) for the normalized genus.
    """
    d = fan.rank
    QL = Q * L
    a_ray = [sum(x * y for x, y in zip(m, n)) for n in fan.rays]
    cache: Dict[Tuple[int, Fraction], dict] = {}
    total: Dict[Tuple[int, int], int] = {}
    omy = [intpoly.one_minus_y_power(k, L) for k in range(d + 1)]
    for cd in cones:
        zeros = sum(1 for i in cd.rays if a_ray[i] == 0)
        for coords, degb in cd.boxes:
            if yval is None:
                term = {(0, degb * L): cd.sign}
            else:
                term = {(0, 0): Fraction(cd.sign * (-1) ** degb)}
            for i, c in zip(cd.rays, coords):
                a = a_ray[i]
                if a == 0:
                    if yval is not None:
                        term = {k: v / 2 for k, v in term.items()}
                    continue
                key = (a, c)
                f = cache.get(key)
                if f is None:
                    f = _factor(a, c, QL, L) if yval is None else _factor_minus1(a, c, QL, L)
                    cache[key] = f
                term = intpoly.mul_trunc(term, f, QL)
                if not term:
                    break
            if not term:
                continue
            if yval is None:
                term = intpoly.mul_trunc(term, omy[d - zeros], QL)
            intpoly.add_into(total, term)
    return intpoly.clean(total)


def _factor_minus1(a: int, c: Fraction, qmax_scaled: int, L: int):
    """q^(c a) / (1 + q^a) at y = -1 (y-exponent slot left at 0)."""
    out = {}
    if a > 0:
        j = 0
        while (c + j) * a * L <= qmax_scaled:
            out[(int((c + j) * a * L), 0)] = (-1) ** j
            j += 1
    else:
        A = -a
        j = 1
        while (j - c) * A * L <= qmax_scaled:
            out[(int((j - c) * A * L), 0)] = (-1) ** (j + 1)
            j += 1
    return out


def _shell_bounds(fan: Fan) -> List[Fraction]:
    """Per-coordinate bound on |m_j| per unit of shell radius."""
    d = fan.rank
    for c in fan.max_cones:
        mat = [fan.rays[i] for i in c]
        if linalg.det(mat) != 0:
            inv = linalg.inverse(mat)  # m = inv * a for a_i = m . n_i
            return [sum(abs(x) for x in row) for row in inv]
    raise ValueError("fan has no full-dimensional cone")


def characters_by_shell(fan: Fan, max_shell: int) -> List[List[Tuple[int, ...]]]:
    """Characters m grouped by s = max_ray |m . n|, for s <= max_shell, in lexicographic order."""
    per = _shell_bounds(fan)
    box = [int(math.floor(p * max_shell)) for p in per]
    shells: List[List[Tuple[int, ...]]] = [[] for _ in range(max_shell + 1)]
    for m in itertools.product(*[range(-b, b + 1) for b in box]):
        s = max(abs(sum(x * y for x, y in zip(m, n))) for n in fan.rays)
        if s <= max_shell:
            shells[s].append(m)
    return shells


def _chunk_worker(args):
    ms, fan, cones, Q, L, yval = args
    acc: Dict = {}
    for m in ms:
        intpoly.add_into(acc, _per_m(m, fan, cones, Q, L, yval))
    return intpoly.clean(acc)


def _sum_characters(ms: List[Tuple[int, ...]], fan: Fan, cones, Q: int, L: int, yval, workers: int):
    if workers <= 1 or len(ms) < 64:
        return _chunk_worker((ms, fan, cones, Q, L, yval))
    size = math.ceil(len(ms) / workers)
    chunks = [ms[i:i + size] for i in range(0, len(ms), size)]
    acc: Dict = {}
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(_chunk_worker, [(ch, fan, cones, Q, L, yval) for ch in chunks]):
            intpoly.add_into(acc, part)  # fixed chunk order keeps the reduction deterministic
    return intpoly.clean(acc)


def _enumerate(fan: Fan, plan: EnumerationPlan, yval=None):
    cones, L = _prepare(fan)
    Q = plan.q_order
    top = plan.bound + plan.stabilization_shells
    shells = characters_by_shell(fan, top)
    workers = plan.workers if plan.workers else default_workers()
    acc: Dict = {}
    for s, ms in enumerate(shells):
        part = _sum_characters(ms, fan, cones, Q, L, yval, workers)
        if s > plan.bound and part:
            raise StabilizationFailure(f"shell {s} beyond m_bound {plan.bound} contributes")
        intpoly.add_into(acc, part)
    return intpoly.clean(acc), L


def ell_toric(fan: Fan, plan: EnumerationPlan = EnumerationPlan()) -> Genus:
    """Cleared genus ``y^(d/2) Ell`` of a complete Gorenstein toric variety."""
    total, L = _enumerate(fan, plan)
    d = fan.rank
    num = intpoly.to_series(total, L, plan.q_order)
    body = sc.mul(num, g_unit_series(plan.q_order) ** d) if d else num
    body = body.truncate(plan.q_order)
    return Genus(d, QYSeries(body.coeffs, plan.q_order), fan.name or "toric", False)


def ellhat_toric(fan: Fan, plan: EnumerationPlan = EnumerationPlan()) -> QYSeries:
    """Normalized y = -1 genus: sum over m and cones of prod 1/(1 + q^(m.n_i))."""
    total, L = _enumerate(fan, plan, yval=-1)
    coeffs: Dict[int, Fraction] = {}
    for (p, _), v in total.items():
        if p % L:
            raise ValueError("fractional q-exponent survives in the normalized genus")
        coeffs[p // L] = coeffs.get(p // L, 0) + v
    return QYSeries({p: L_.const(v) for p, v in coeffs.items() if v}, plan.q_order)


def ellhat_from_genus(g: Genus) -> QYSeries:
    """body(-1) / G(-1)^d, the same normalization read off a computed genus."""
    gm = sc.eval_y(g_series(int(g.order)), -1)
    return sc.mul(sc.eval_y(g.body, -1), sc.inv(gm ** g.d) if g.d else QYSeries.one())


# --------------------------------------------------------------------------
# The P^2 identity and its bijective proof
# --------------------------------------------------------------------------

def p2_identity_sides(order: int) -> Tuple[List[int], List[int]]:
    """Both sides of sum q^(m+n)/((1+q^m)(1+q^n)(1+q^(m+n))) = sum q^(2r) sigma(r)."""
    lhs = [0] * (order + 1)

    def inv1p(k):
        s = [0] * (order + 1)
        j = 0
        while k * j <= order:
            s[k * j] = (-1) ** j
            j += 1
        return s

    def mult(a, b):
        out = [0] * (order + 1)
        for i, x in enumerate(a):
            if x:
                for j in range(order + 1 - i):
                    if b[j]:
                        out[i + j] += x * b[j]
        return out

    cache = {k: inv1p(k) for k in range(1, order + 1)}
    for m in range(1, order + 1):
        for n in range(1, order + 1 - m):
            t = mult(mult(cache[m], cache[n]), cache[m + n])
            shift = m + n
            for i in range(order + 1 - shift):
                lhs[i + shift] += t[i]
    rhs = [0] * (order + 1)
    for r in range(1, order // 2 + 1):
        rhs[2 * r] = sum(k for k in range(1, r + 1) if r % k == 0)
    return lhs, rhs


def _tuples(d: int):
    for m in range(1, d + 1):
        for a in range(1, d // m + 1):
            rest = d - m * a
            if rest <= 0:
                continue
            for n in range(1, rest + 1):
                if rest % n == 0:
                    yield (a, rest // n, m, n)


@dataclass
class BijectionReport:
    d: int
    size_i: int
    size_j: int
    survivors: int
    signed_sum_j: int


def verify_bijection(d_max: int) -> List[BijectionReport]:
    """Check the involution pairing that proves the P^2 identity, for every d <= d_max."""
    reports = []
    for d in range(2, d_max + 1):
        I = [t for t in _tuples(d) if min(t[0], t[1]) % 2 == 1]
        iset = set(I)
        J = [t for t in I if not (t[2] == t[3] and (t[0] + t[1]) % 2 == 0)]
        jset = set(J)
        even = [t for t in J if (t[0] + t[1]) % 2 == 0]
        odd = [t for t in J if (t[0] + t[1]) % 2 == 1]

        def fwd(t):
            a, b, m, n = t
            return (a + b, b, m, n - m) if n > m else (a, a + b, m - n, n)

        def back(t):
            a, b, m, n = t
            return (a - b, b, m, n - m) if n > m else (a, b - a, m - n, n)

        def back_odd(t):
            a, b, m, n = t
            return (a - b, b, m, m + n) if a > b else (a, b - a, m + n, n)

        for t in even:
            u = fwd(t)
            if u not in jset or (u[0] + u[1]) % 2 != 1:
                raise BijectionFailure(f"image {u} of {t} is not in the odd part")
            if back_odd(u) != t:
                raise BijectionFailure(f"maps do not invert at {t}")
        for t in odd:
            u = back_odd(t)
            if u not in jset or (u[0] + u[1]) % 2 != 0:
                raise BijectionFailure(f"image {u} of {t} is not in the even part")
            if fwd(u) != t:
                raise BijectionFailure(f"maps do not invert at {t}")
        signed = sum((-1) ** (t[0] + t[1]) for t in J)
        if signed != 0:
            raise BijectionFailure(f"signed sum over J is {signed} at d = {d}")
        survivors = len(I) - len(J)
        expected = 0 if d % 2 else sum(k for k in range(1, d // 2 + 1) if (d // 2) % k == 0)
        if survivors != expected:
            raise BijectionFailure(f"{survivors} surviving terms at d = {d}, expected {expected}")
        if sum((-1) ** (t[0] + t[1]) for t in I) != expected:
            raise BijectionFailure(f"signed count over I differs from sigma at d = {d}")
        reports.append(BijectionReport(d, len(I), len(J), survivors, signed))
    return reports


# --------------------------------------------------------------------------
# Numeric checks at y = -1
# --------------------------------------------------------------------------

def _theta(z: complex, tau: complex, terms: int) -> complex:
    return theta_numeric(NumericPoint(tau, z), terms)[0]


def rho_toric_numeric(fan: Fan, p: NumericPoint, terms: int = 40, guard: float = 1e-8) -> complex:
    """The theta closed form over max cones and pairs of box elements."""
    if not fan.gorenstein:
        raise NotGorenstein("numeric rho needs a Gorenstein fan")
    tau = complex(p.tau)
    nu = [complex(x) for x in p.nu]
    total = 0j
    for c in fan.max_cones:
        box = box_elements([fan.rays[i] for i in c])
        dual = box.dual_basis
        mnu = [sum(complex(x) * v for x, v in zip(mi, nu)) for mi in dual]
        acc = 0j
        for ck, _ in zip(box.coords, box.elements):
            degk = int(sum(ck))
            for cl in box.coords:
                prod = complex((-1) ** degk)
                for i in range(fan.rank):
                    arg = -float(ck[i]) * tau - mnu[i] - float(cl[i])
                    den = _theta(arg, tau, terms)
                    if abs(den) < guard:
                        raise NearSingular(f"theta({arg}) is {abs(den):.2e}")
                    prod *= _theta(0.5 + arg, tau, terms) / den
                acc += prod
        total += acc / box.group_order
    return total


def rho_toric_series_numeric(fan: Fan, p: NumericPoint, q_order: int = 8,
                             m_bound: Optional[int] = None) -> complex:
    """The character sum with weights e^(2 pi i m.nu), each m-term summed exactly to q_order."""
    cones, L = _prepare(fan)
    tau = complex(p.tau)
    q = cmath.exp(2j * math.pi * tau)
    nu = [complex(x) for x in p.nu]
    bound = m_bound if m_bound is not None else 2 * q_order + 2
    total = 0j
    for ms in characters_by_shell(fan, bound):
        for m in ms:
            part = _per_m(m, fan, cones, q_order, L, yval=-1)
            if not part:
                continue
            w = cmath.exp(2j * math.pi * sum(x * v for x, v in zip(m, nu)))
            total += w * sum(float(v) * q ** (k / L) for (k, _), v in part.items())
    gm = g_numeric(0.5, tau)
    return total * gm ** fan.rank


def gamma02_numeric_check(fan: Fan, p: NumericPoint, tol: float = 1e-8, terms: int = 60) -> dict:
    """rho(tau/(1-2tau), nu/(1-2tau)) against (-i)^d rho(tau, nu)."""
    tau = complex(p.tau)
    nu = tuple(complex(x) for x in p.nu)
    lhs_point = NumericPoint(tau / (1 - 2 * tau), 0j, tuple(x / (1 - 2 * tau) for x in nu))
    lhs = rho_toric_numeric(fan, lhs_point, terms)
    rhs = (-1j) ** fan.rank * rho_toric_numeric(fan, p, terms)
    err = abs(lhs - rhs) / max(1.0, abs(rhs))
    return {"check": "gamma0-2", "status": "pass" if err < tol else "fail",
            "detail": {"lhs": [lhs.real, lhs.imag], "rhs": [rhs.real, rhs.imag], "rel_error": err}}


def parity_numeric_check(fan: Fan, p: NumericPoint, tol: float = 1e-8) -> dict:
    """rho(-nu) = (-1)^d rho(nu)."""
    a = rho_toric_numeric(fan, p)
    b = rho_toric_numeric(fan, NumericPoint(p.tau, p.z, tuple(-complex(x) for x in p.nu)))
    err = abs(b - (-1) ** fan.rank * a) / max(1.0, abs(a))
    return {"check": "nu-parity", "status": "pass" if err < tol else "fail",
            "detail": {"rel_error": err}}


def closed_form_vs_series_check(fan: Fan, p: NumericPoint, q_order: int = 12, tol: float = 1e-8) -> dict:
    """Theta closed form against the weighted character sum.

    The character sum carries no ``y^(-d/2)`` prefactor, so at y = -1 the two
    differ by ``(-1)^(d/2)`` for even d.  For odd d both vanish identically.
    """
    closed = rho_toric_numeric(fan, p)
    series = rho_toric_series_numeric(fan, p, q_order)
    factor = (-1) ** (fan.rank // 2) if fan.rank % 2 == 0 else 1
    err = abs(closed - factor * series) / max(1.0, abs(closed))
    return {"check": "closed-form-vs-series", "status": "pass" if err < tol else "fail",
            "detail": {"closed_form": [closed.real, closed.imag], "series": [series.real, series.imag],
                       "factor": factor, "rel_error": err}}


# --------------------------------------------------------------------------
# The one-dimensional key identity behind the cone factors
# --------------------------------------------------------------------------

_ALLOWED_DENOMINATORS = {(0, 2): "1-t", (2, 0): "1-y", (2, 2): "1-ty"}


def cone_factor_sides(order: int) -> Tuple[QYSeries, QYSeries]:
    """Both sides of the t-deformed product identity, as q-series over (y, t).

    Left: prod_k (1 - t y q^(k-1))(1 - t^-1 y^-1 q^k) / ((1 - t q^(k-1))(1 - t^-1 q^k)).
    Right: sum_m t^m / (1 - y q^m) * G(y, q), with the m-sum taken for
    |q| < |t| < 1, so the positive m at q^0 add up to t/(1 - t).
    """
    from .theta_forms import product_series
    lead = L_({(0, 0): 1, (2, 2): -1}) * L_.binomial_inverse(0, 2)
    factors = []
    for k in range(1, order + 1):
        factors += [(2, k, 1, 2), (-2, k, 1, -2), (0, k, -1, 2), (0, k, -1, -2)]
    lhs = sc.mul(QYSeries({0: lead}), product_series(factors, order))
    msum: Dict[int, LocalizedLaurent] = {0: L_.mono(1, 0, 2) * L_.binomial_inverse(0, 2) + L_.binomial_inverse(2, 0)}
    for n in range(1, order + 1):
        terms: Dict[Tuple[int, int], int] = {}
        for m in range(1, n + 1):
            if n % m == 0:
                k = n // m
                terms[(2 * k, 2 * m)] = terms.get((2 * k, 2 * m), 0) + 1
                terms[(-2 * k, -2 * m)] = terms.get((-2 * k, -2 * m), 0) - 1
        msum[n] = L_(terms)
    rhs = sc.mul(QYSeries(msum, order), g_series(order))
    return lhs.truncate(order), rhs.truncate(order)


def cone_factor_check(order: int = 10, t_window: Tuple[int, int] = (-10, 10)) -> dict:
    """Exact comparison of both sides as localized Laurent coefficients.

    The comparison is exact in t, so it covers any requested t-window; the
    report records the window together with the t-range actually present.
    """
    lhs, rhs = cone_factor_sides(order)
    diff = sc.diff_monomial(lhs, rhs, order)
    dens = set()
    tmin, tmax = Fraction(0), Fraction(0)
    for s in (lhs, rhs):
        for c in s.coeffs.values():
            dens.update(c.denom)
            for (_, t2) in c.terms:
                tmin, tmax = min(tmin, Fraction(t2, 2)), max(tmax, Fraction(t2, 2))
    unexpected = sorted(d for d in dens if d not in _ALLOWED_DENOMINATORS)
    ok = diff is None and not unexpected
    return {"check": "cone-factor-identity", "status": "pass" if ok else "fail",
            "detail": {"q_order": order, "t_window": list(t_window),
                       "numerator_t_range": [str(tmin), str(tmax)],
                       "first_difference": None if diff is None else f"q^{diff[0]} y^{Fraction(diff[1], 2)}",
                       "denominators": sorted(_ALLOWED_DENOMINATORS.get(d, str(d)) for d in dens),
                       "unexpected_denominators": [str(d) for d in unexpected]}}
