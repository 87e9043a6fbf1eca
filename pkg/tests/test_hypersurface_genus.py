import cmath
import math
import random

import pytest

from ellgenus import series_core as sc
from ellgenus.chern_engine import HypersurfaceSpec, ell_hypersurface_projective, ell_projective_space
from ellgenus.hypersurface_genus import (CYFamily, admissible_residues, check_mirror_sign,
                                         check_mirror_transform, ell_cy, elliptic_transform_check,
                                         jacobi_numeric_check, mirror, mirror_transform, rho_cy_numeric,
                                         rho_cy_series_numeric, simplex_data)
from ellgenus.series_core import Genus, LocalizedLaurent as L
from ellgenus.theta_forms import NumericPoint, evaluate_series
from ellgenus.toric_core import (Unsupported, box_elements, dual_polytope, kstar_cones, load_fixture,
                                 subdivide_simplicial)
from ellgenus.toric_genus import EnumerationPlan, NearSingular

TAU, Z = 1.2j, 0.11 + 0.03j


def family(name, q_order=4):
    return CYFamily(load_fixture(name), EnumerationPlan(q_order=q_order))


def generic_nu(rank, scale=1.0):
    return tuple(scale * (0.0131 * (k + 1) ** 1.37 + 0.002j * k) for k in range(rank))


def seeded_samples(rank, seed=1, count=5):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        tau = complex(round(rng.uniform(-0.3, 0.3), 6), round(rng.uniform(0.9, 1.4), 6))
        z = complex(round(rng.uniform(-0.2, 0.2), 6), round(rng.uniform(-0.05, 0.05), 6))
        nu = tuple(complex(round(rng.uniform(-0.1, 0.1), 6), round(rng.uniform(-0.02, 0.02), 6))
                   for _ in range(rank))
        out.append(NumericPoint(tau, z, nu))
    return out


@pytest.fixture(scope="module")
def k3_pair_genera():
    fam = family("quartic_k3", 6)
    return ell_cy(fam), ell_cy(mirror(fam))


@pytest.fixture(scope="module")
def quintic_pair_genera():
    fam = family("quintic", 4)
    return ell_cy(fam), ell_cy(mirror(fam))


# -- exact engine --------------------------------------------------------------------

@pytest.mark.parametrize("name,n,k,q", [("quartic_k3", 3, 4, 4), ("quintic", 4, 5, 4),
                                        ("sextic", 5, 6, 3), ("octic", 7, 8, 2),
                                        ("cubic_curve", 2, 3, 4)])
def test_cross_engine(name, n, k, q):
    g = ell_cy(family(name, q))
    h = ell_hypersurface_projective(HypersurfaceSpec(n, k), q)
    assert g.d == h.d
    assert sc.diff_monomial(g.body, h.body, q) is None


def test_quintic_q0(quintic_pair_genera):
    g, _ = quintic_pair_genera
    assert g.body[0] == L.from_y({1: -100, 2: -100})


def test_quintic_euler(quintic_pair_genera):
    g, _ = quintic_pair_genera
    e = sc.eval_y(g.body, 1)
    assert e[0] == L.const(-200) and all(e[p].is_zero() for p in e.coeffs if p)


def test_genus_integral(quintic_pair_genera):
    for g in quintic_pair_genera:
        for c in g.body.coeffs.values():
            assert not c.denom and all(v == int(v) for v in c.terms.values())


def test_odd_dimension_chi0_vanishes(quintic_pair_genera):
    for g in quintic_pair_genera:
        assert (0, 0) not in g.body[0].terms and (6, 0) not in g.body[0].terms


def test_cubic_curve_vanishes():
    assert ell_cy(family("cubic_curve", 4)).body.is_zero()


def test_non_simplex_unsupported():
    pair = dual_polytope([[1, 0], [0, 1], [-1, 0], [0, -1]])
    with pytest.raises(Unsupported):
        ell_cy(CYFamily(pair, EnumerationPlan(q_order=2)))


def test_worker_count_does_not_change_result():
    a = ell_cy(CYFamily(load_fixture("quintic"), EnumerationPlan(q_order=3, workers=1)))
    b = ell_cy(CYFamily(load_fixture("quintic"), EnumerationPlan(q_order=3, workers=3)))
    assert sc.series_to_json(a.body) == sc.series_to_json(b.body)


def test_admissible_residues_form_a_group():
    data = simplex_data(load_fixture("quintic").mirror().kstar_rays())
    res = admissible_residues(data)
    e = data.exponent
    s = set(res)
    assert tuple([0] * len(res[0])) in s
    for a in res[:10]:
        for b in res[:10]:
            assert tuple((x + y) % e for x, y in zip(a, b)) in s


# -- mirror --------------------------------------------------------------------------

def test_mirror_involution():
    fam = family("quintic")
    assert mirror(mirror(fam)).pair == fam.pair


def test_mirror_of_quintic():
    m = mirror(family("quintic"))
    assert sorted(m.pair.delta) == sorted([(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1),
                                           (-1, -1, -1, -1)])
    assert m.d == 3


def test_mirror_k3_is_reflexive():
    m = load_fixture("quartic_k3").mirror()
    again = dual_polytope([list(v) for v in m.delta])
    assert sorted(again.delta_star) == sorted(m.delta_star)


def test_k3_mirror_sign(k3_pair_genera):
    assert check_mirror_sign(*k3_pair_genera)["status"] == "pass"


def test_quintic_mirror_sign(quintic_pair_genera):
    rep = check_mirror_sign(*quintic_pair_genera)
    assert rep["status"] == "pass" and rep["detail"]["sign"] == -1


def test_cubic_curve_mirror_sign():
    fam = family("cubic_curve", 4)
    a, b = ell_cy(fam), ell_cy(mirror(fam))
    assert a.body.is_zero() and b.body.is_zero()
    assert check_mirror_sign(a, b)["status"] == "pass"


def test_k3_mirror_transform(k3_pair_genera):
    rep = check_mirror_transform(*k3_pair_genera)
    assert rep["status"] == "pass" and rep["detail"]["overlap"] >= 2


def test_quintic_mirror_transform(quintic_pair_genera):
    assert check_mirror_transform(*quintic_pair_genera)["status"] == "pass"


def test_transform_twice_is_identity(k3_pair_genera):
    g, _ = k3_pair_genera
    once = Genus(g.d, mirror_transform(g))
    twice = mirror_transform(once)
    assert twice.order >= 0
    assert sc.diff_monomial(twice, g.body, twice.order) is None


def test_subdivision_independence_numeric():
    pair = load_fixture("quartic_k3").mirror()
    p = NumericPoint(TAU, Z, generic_nu(4))
    values = [rho_cy_numeric(pair, subdivide_simplicial(pair, o), p) for o in ("lex", "shuffle:1")]
    assert abs(values[0] - values[1]) < 1e-10 * abs(values[0])


# -- elliptic law --------------------------------------------------------------------------

def test_elliptic_law_k3(k3_pair_genera):
    assert elliptic_transform_check(k3_pair_genera[0])["status"] == "pass"


def test_elliptic_law_quintic(quintic_pair_genera):
    for g in quintic_pair_genera:
        assert elliptic_transform_check(g)["status"] == "pass"


def test_elliptic_law_p2_fails():
    rep = elliptic_transform_check(ell_projective_space(2, 6))
    assert rep["status"] == "fail" and rep["detail"]["first_difference"]


# -- closed form ----------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["quartic_k3", "quintic"])
def test_closed_form_matches_series(name):
    pair = load_fixture(name)
    p = NumericPoint(TAU, Z, generic_nu(pair.dim + 1))
    closed = rho_cy_numeric(pair, subdivide_simplicial(pair), p)
    series = rho_cy_series_numeric(pair, p)
    assert abs(closed - series) < 1e-5 * max(1, abs(closed))


def test_m1_orthogonal_to_box():
    pair = load_fixture("quartic_k3").mirror()
    for cone in kstar_cones(subdivide_simplicial(pair)):
        box = box_elements(cone)
        for el in box.elements:
            assert sum(a * b for a, b in zip(box.dual_basis[0], el)) == 0


def test_small_nu_limit_is_genus(k3_pair_genera):
    g, _ = k3_pair_genera
    pair = load_fixture("quartic_k3")
    sigma = subdivide_simplicial(pair)
    q, y = cmath.exp(2j * math.pi * TAU), cmath.exp(2j * math.pi * Z)
    target = evaluate_series(g.body, y, q) / y
    errs = [abs(rho_cy_numeric(pair, sigma, NumericPoint(TAU, Z, generic_nu(4, s))) - target)
            for s in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-3 * abs(target)


def test_near_singular_nu():
    pair = load_fixture("quartic_k3")
    with pytest.raises(NearSingular):
        rho_cy_numeric(pair, subdivide_simplicial(pair), NumericPoint(TAU, Z, (0, 0, 0, 0)))


@pytest.mark.parametrize("name", ["quartic_k3", "quintic"])
def test_jacobi_law(name):
    pair = load_fixture(name)
    rep = jacobi_numeric_check(pair, subdivide_simplicial(pair), seeded_samples(pair.dim + 1), tol=1e-7)
    assert rep["status"] == "pass", rep["detail"]


def test_jacobi_negative_control():
    pair = load_fixture("quartic_k3")
    rep = jacobi_numeric_check(pair, subdivide_simplicial(pair), seeded_samples(4, count=2), tol=1e-7,
                               drop_deg_factor=True)
    assert rep["status"] == "fail"
