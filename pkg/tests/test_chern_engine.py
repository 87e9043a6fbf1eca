from fractions import Fraction

import pytest

from ellgenus import series_core as sc
from ellgenus.chern_engine import (HypersurfaceSpec, XSeries, char_series, ell_hypersurface_projective,
                                   ell_projective_space, genus_product, point_genus, todd_prefactor)
from ellgenus.series_core import LocalizedLaurent as L, QYSeries
from ellgenus.theta_forms import g_series


def q0_vector(g):
    """Integer y-coefficients of the q^0 slice, y^0 .. y^d."""
    terms = g.body[0].terms
    return [terms.get((2 * p, 0), 0) for p in range(g.d + 1)]


def euler_series(g):
    return sc.eval_y(g.body, 1)


def assert_q_constant(s, value):
    assert s[0] == L.const(value)
    assert all(s[p].is_zero() for p in s.coeffs if p != 0)


# -- characteristic series ------------------------------------------------------

def test_char_series_degree_zero_is_g():
    q = char_series(3, 5)
    assert sc.diff_monomial(q[0], g_series(5), 5) is None


def test_char_series_q0_matches_todd_prefactor():
    # x(1 - y e^-x)/(1 - e^-x) = (1 - y) + (1 + y)/2 x + (1 - y)/12 x^2 + 0 x^3
    q = char_series(3, 0)
    expected = [{0: 1, 1: -1}, {0: Fraction(1, 2), 1: Fraction(1, 2)},
                {0: Fraction(1, 12), 1: Fraction(-1, 12)}, {}]
    for k, e in enumerate(expected):
        assert q[k][0] == L.from_y(e)


def test_todd_series_at_y_zero():
    # y = 0 leaves x/(1 - e^-x) = 1 + x/2 + x^2/12 - x^4/720
    t = todd_prefactor(4)
    got = [t[k][0].terms.get((0, 0), 0) for k in range(5)]
    assert got == [1, Fraction(1, 2), Fraction(1, 12), 0, Fraction(-1, 720)]


def test_xseries_nilpotent():
    x = XSeries([QYSeries.zero(), QYSeries.one()], 2)
    assert (x ** 3)[2].is_zero() and (x * x)[2] == QYSeries.one()


def test_xseries_inverse():
    a = XSeries([QYSeries.one(), QYSeries.one() * 3, QYSeries.one() * 5], 2)
    prod = a * a.inv()
    assert prod[0] == QYSeries.one() and prod[1].is_zero() and prod[2].is_zero()


# -- projective spaces ---------------------------------------------------------------

def test_p1_hodge():
    assert q0_vector(ell_projective_space(1, 3)) == [1, 1]


def test_p2_hodge():
    assert q0_vector(ell_projective_space(2, 3)) == [1, 1, 1]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_projective_euler(n):
    assert_q_constant(euler_series(ell_projective_space(n, 5)), n + 1)


def test_projective_bad_n():
    with pytest.raises(ValueError):
        ell_projective_space(0, 2)


# -- hypersurfaces -------------------------------------------------------------------------

def test_k3_hodge():
    assert q0_vector(ell_hypersurface_projective(HypersurfaceSpec(3, 4), 2)) == [2, 20, 2]


def test_quintic_euler():
    assert_q_constant(euler_series(ell_hypersurface_projective(HypersurfaceSpec(4, 5), 4)), -200)


def test_quintic_hodge_vector():
    assert q0_vector(ell_hypersurface_projective(HypersurfaceSpec(4, 5), 2)) == [0, -100, -100, 0]


def test_cubic_curve_is_zero():
    g = ell_hypersurface_projective(HypersurfaceSpec(2, 3), 4)
    assert g.body.is_zero()


def test_spec_validation():
    with pytest.raises(ValueError):
        HypersurfaceSpec(1, 2)
    assert HypersurfaceSpec(5, 6).calabi_yau and not HypersurfaceSpec(3, 3).calabi_yau


@pytest.mark.parametrize("n,k", [(2, 2), (3, 2), (3, 3), (3, 4), (4, 5), (5, 6)])
def test_integrality_and_palindromy(n, k):
    g = ell_hypersurface_projective(HypersurfaceSpec(n, k), 3)
    for c in g.body.coeffs.values():
        assert not c.denom
        assert all(Fraction(v).denominator == 1 for v in c.terms.values())
    v = q0_vector(g)
    assert v == v[::-1]
    # Euler number from the q^0 slice alone equals the full specialization
    assert_q_constant(euler_series(g), sum(v))


def test_quadric_surface_matches_p1xp1():
    quadric = ell_hypersurface_projective(HypersurfaceSpec(3, 2), 4)
    p1 = ell_projective_space(1, 4)
    prod = genus_product(p1, p1)
    assert sc.diff_monomial(quadric.body, prod.body, 4) is None


# -- elliptic transformation law -------------------------------------------------------------

def _law_holds(g):
    from ellgenus.hypersurface_genus import elliptic_transform_check
    return elliptic_transform_check(g)["status"] == "pass"


@pytest.mark.parametrize("n", [3, 4])
def test_cy_transformation_law(n):
    assert _law_holds(ell_hypersurface_projective(HypersurfaceSpec(n, n + 1), 6))


def test_p2_transformation_law_fails():
    assert not _law_holds(ell_projective_space(2, 6))


# -- products --------------------------------------------------------------------------------------

def test_product_with_point():
    k3 = ell_hypersurface_projective(HypersurfaceSpec(3, 4), 3)
    assert genus_product(k3, point_genus()).body == k3.body


def test_k3_squared():
    k3 = ell_hypersurface_projective(HypersurfaceSpec(3, 4), 3)
    sq = genus_product(k3, k3)
    assert sq.d == 4
    assert sq.body[0] == L.from_y({0: 4, 1: 80, 2: 408, 3: 80, 4: 4})
    assert_q_constant(euler_series(sq), 576)
