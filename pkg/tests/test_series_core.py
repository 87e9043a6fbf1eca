import random
from fractions import Fraction

import pytest

from ellgenus import series_core as sc
from ellgenus.series_core import (INF, Genus, LocalizedLaurent as L, QYSeries, SlopeCert)
from ellgenus.theta_forms import g_series, theta_reduced


def ys(coeffs, order=INF):
    """Series from {(q, y): c} with ordinary y-exponents."""
    return QYSeries.from_dict(coeffs, order)


def random_series(rng, order=4, unit=False):
    data = {}
    for p in range(order + 1):
        for e in range(-2, 3):
            if rng.random() < 0.4:
                data[(p, e)] = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
    if unit:
        data = {k: v for k, v in data.items() if k[0] > 0}
        data[(0, rng.randint(-2, 2))] = rng.choice([1, -2, Fraction(3, 2)])
    return ys(data, order)


# -- construction -------------------------------------------------------------

def test_make_empty_is_zero():
    assert sc.make({}, 5).is_zero()


def test_make_unit_is_multiplicative_identity():
    one = sc.make({0: 1}, 5)
    a = ys({(0, 1): 2, (2, -1): 3}, 5)
    assert sc.mul(one, a) == a


def test_make_q0_of_g():
    assert g_series(3)[0] == L.from_y({0: 1, 1: -1})


def test_make_off_grid_raises():
    with pytest.raises(sc.GridError):
        sc.make({Fraction(1, 3): 1}, 5, grid=2)


def test_laurent_rejects_off_grid_exponent():
    with pytest.raises(sc.GridError):
        L.from_y({Fraction(1, 3): 1})


def test_zero_coefficients_dropped():
    s = ys({(0, 0): 1, (1, 2): 0}, 3)
    assert s.exponents() == [0]


def test_denominator_cancels_when_divisible():
    c = L.from_y({0: 1, 1: -1}) * L.binomial_inverse(2)
    assert c == L.const(1) and not c.denom


# -- ring structure -----------------------------------------------------------

def test_ring_axioms_random():
    rng = random.Random(11)
    for _ in range(25):
        a, b, c = (random_series(rng) for _ in range(3))
        assert (a + b) + c == a + (b + c)
        assert sc.mul(a, b + c) == sc.mul(a, b) + sc.mul(a, c)
        assert sc.mul(a, b) == sc.mul(b, a)
        assert a + QYSeries.zero(4) == a


def test_g_squared_at_q0():
    g = g_series(2)
    assert sc.mul(g, g)[0] == L.from_y({0: 1, 1: -2, 2: 1})


def test_windowed_telescoping():
    geo = QYSeries({0: L.from_y({j: 1 for j in range(0, 12)})}, 0, (-5, 5), SlopeCert(0, 0, 0, 11))
    one_minus_y = QYSeries({0: L.from_y({0: 1, 1: -1})}, 0, None, SlopeCert(0, 0, 0, 1))
    prod = sc.mul(one_minus_y, geo)
    lo, hi = prod.window
    assert prod[0] == L.const(1)
    assert lo >= -5 and hi <= 5


def test_windowed_mul_needs_certificates():
    a = QYSeries({0: L.from_y({0: 1})}, 2, (-3, 3))
    b = ys({(0, 0): 1, (1, 1): 1}, 2)
    with pytest.raises(sc.WindowError):
        sc.mul(a, b)


def test_windowed_mul_agrees_with_exact_mul():
    rng = random.Random(5)
    for _ in range(10):
        a, b = random_series(rng, 3), random_series(rng, 3)
        ca, cb = SlopeCert(0, 0, 2, 2), SlopeCert(0, 0, 2, 2)
        wa = QYSeries(a.coeffs, 3, (-2, 2), ca)
        wb = QYSeries(b.coeffs, 3, (-2, 2), cb)
        w = sc.mul(wa, wb)
        exact = sc.mul(a, b)
        lo, hi = w.window
        for p in range(4):
            for (e2, _), v in exact[p].terms.items():
                if lo <= Fraction(e2, 2) <= hi:
                    assert w[p].terms.get((e2, 0)) == v


def test_dense_kernel_matches_generic_product():
    big = g_series(30)
    generic = sc.mul(big, big)
    a = sc.eval_y(generic, 1)
    assert a.is_zero()  # G(1, q) = 0
    sq = sc.mul(sc.eval_y(big, -1), sc.eval_y(big, -1))
    assert sq[0] == L.const(4)


# -- inversion and division ---------------------------------------------------

def test_inv_one():
    assert sc.inv(QYSeries.one(5)) == QYSeries.one(5)


def test_inv_geometric():
    s = sc.inv(sc.make({0: 1, 1: -1}, 6))
    assert all(s[p] == L.const(1) for p in range(7))


def test_inv_g_minus_one():
    g = sc.eval_y(g_series(4), -1)
    assert sc.inv(g)[0] == L.const(Fraction(1, 2))


def test_inv_two_sided_random():
    rng = random.Random(3)
    for _ in range(100):
        a = random_series(rng, 3, unit=True)
        b = sc.inv(a)
        assert sc.mul(a, b) == QYSeries.one(3)


def test_inv_non_unit_raises():
    with pytest.raises(sc.NotInvertible):
        sc.inv(ys({(0, 0): 1, (0, 1): 1, (0, 3): 1}, 2))


def test_exact_div_self():
    a = ys({(0, 1): 2, (1, 0): 1}, 4)
    assert sc.exact_div(a, a) == QYSeries.one(4)


def test_exact_div_factorization():
    num = QYSeries({0: L.from_y({1: 1, -1: -1})})
    den = QYSeries({0: L.from_y({Fraction(1, 2): 1, Fraction(-1, 2): -1})})
    assert sc.exact_div(num, den) == QYSeries({0: L.from_y({Fraction(1, 2): 1, Fraction(-1, 2): 1})})


def test_exact_div_remainder_raises():
    num = QYSeries({0: L.from_y({0: 1})})
    den = QYSeries({0: L.from_y({0: 1, 1: -1})})
    with pytest.raises(sc.NotDivisible):
        sc.exact_div(num, den)


# -- binomial expansions --------------------------------------------------------

def test_expand_positive():
    s = sc.expand_binomial_inverse(1, 2, 6)
    assert s.to_dict() == {(0, 0): 1, (2, 1): 1, (4, 2): 1, (6, 3): 1}


def test_expand_negative():
    s = sc.expand_binomial_inverse(1, -1, 3)
    assert s.to_dict() == {(1, -1): -1, (2, -2): -1, (3, -3): -1}


def test_expand_zero_is_symbolic():
    s = sc.expand_binomial_inverse(1, 0, 3)
    assert s[0].denom == ((2, 0),)


@pytest.mark.parametrize("c,s", [(1, 2), (1, -1), (2, 3), (-1, -2)])
def test_expand_times_binomial_is_one(c, s):
    order = 8
    e = sc.expand_binomial_inverse(c, s, order)
    # multiply by (1 - y^c q^s) monomial by monomial; only q-exponents where
    # both the series and its shift are complete are compared
    prod = {}
    for (p, y), v in e.to_dict().items():
        prod[(p, y)] = prod.get((p, y), 0) + v
        prod[(p + s, y + c)] = prod.get((p + s, y + c), 0) - v
    top = order - abs(s)
    assert {k: v for k, v in prod.items() if v and k[0] <= top} == {(0, 0): 1}


# -- substitutions ----------------------------------------------------------------

def test_qshift_monomial():
    a = ys({(0, 1): 1})
    assert sc.subst_y_qshift(a, 1).to_dict() == {(1, 1): 1}


def test_qshift_linearity():
    a = ys({(2, 1): 1, (2, -1): 1})
    assert sc.subst_y_qshift(a, 1).to_dict() == {(3, 1): 1, (1, -1): 1}


def test_qshift_theta_law():
    th = theta_reduced(8).body
    shifted = sc.subst_y_qshift(th, 1)
    # theta(z + tau) = -y^-1 q^-1/2 theta(z); the q^(1/8) prefix is unchanged
    target = (th * -1).shift(y=-1, q=Fraction(-1, 2))
    order = min(shifted.order, target.order)
    assert order >= 5
    assert sc.diff_monomial(shifted, target, order) is None


def test_qshift_truncated_without_cert_raises():
    with pytest.raises(sc.WindowError):
        sc.subst_y_qshift(ys({(0, 1): 1}, 3), 1)


def test_qshift_roundtrip_on_overlap():
    g = Genus(2, ys({(0, 0): 1, (0, 1): 20, (0, 2): 1, (1, -1): 3, (1, 3): 3}, 6).truncate(6))
    there = sc.subst_y_qshift(g.body, 1)
    back = sc.subst_y_qshift(QYSeries(there.coeffs, there.order, None, sc.SlopeCert(0, 0, 40, 40)), -1)
    order = min(back.order, g.order)
    assert sc.diff_monomial(back, g.body, order) is None


def test_invert_y():
    a = ys({(0, 2): 1, (0, -1): -1})
    assert sc.subst_y_invert(a).to_dict() == {(0, -2): 1, (0, 1): -1}


def test_eval_y_minus_one():
    assert sc.eval_y(ys({(0, 0): 1, (0, 1): -1}), -1)[0] == L.const(2)


def test_eval_y_euler_p1():
    assert sc.eval_y(ys({(0, 0): 1, (0, 1): 1}), 1)[0] == L.const(2)


def test_eval_y_pole_raises():
    s = QYSeries({0: L.binomial_inverse(2)})
    with pytest.raises(sc.PoleAtEvaluation):
        sc.eval_y(s, 1)


# -- genus wrapper and serialization -----------------------------------------------

def test_genus_rejects_denominators():
    with pytest.raises(sc.SeriesError):
        Genus(1, QYSeries({0: L.binomial_inverse(2)}, 2))


def test_genus_rejects_q0_outside_range():
    with pytest.raises(sc.SeriesError):
        Genus(1, ys({(0, 2): 1}, 2))


def test_format_and_json_roundtrip():
    s = QYSeries({0: L.from_y({Fraction(1, 2): Fraction(3, 2), -1: -2}), 2: L.from_y({0: 5})}, 3)
    text = sc.format_series(s)
    assert text.splitlines()[0] == "q^0: -2 y^-1 + 3/2 y^1/2"
    back = sc.series_from_json(sc.series_to_json(s))
    assert back == s and back.order == 3
