import itertools
import json
from fractions import Fraction
from math import comb

import pytest

from ellgenus import toric_core as tc
from ellgenus.toric_core import (NotComplete, NotReflexive, Unsupported, ValidationError, box_elements,
                                 dual_polytope, lattice_points, load_fan, load_fixture,
                                 subdivide_simplicial)

QUINTIC_DELTA = [[4, -1, -1, -1], [-1, 4, -1, -1], [-1, -1, 4, -1], [-1, -1, -1, 4], [-1, -1, -1, -1]]
QUINTIC_DSTAR = [(-1, -1, -1, -1), (0, 0, 0, 1), (0, 0, 1, 0), (0, 1, 0, 0), (1, 0, 0, 0)]


# -- fans ------------------------------------------------------------------------------

def test_p1_fan():
    fan = load_fan([[1], [-1]], [[0], [1]])
    assert fan.smooth and fan.gorenstein


def test_p2_fan_deg_data():
    fan = load_fixture("p2")
    assert fan.smooth and fan.gorenstein
    for c, m in zip(fan.max_cones, fan.deg_data):
        assert all(sum(a * b for a, b in zip(m, fan.rays[i])) == 1 for i in c)


def test_singular_cone_fan():
    fan = load_fixture("singular_surface")
    assert not fan.smooth and fan.gorenstein
    idx = fan.max_cones.index((0, 1))
    assert fan.deg_data[idx] == (1, 0)
    assert fan.box((0, 1)).group_order == 2


def test_non_primitive_ray():
    with pytest.raises(ValidationError):
        load_fan([[2, 0], [0, 1], [-1, -1]], [[0, 1], [1, 2], [0, 2]])


def test_degenerate_cone_unsupported():
    with pytest.raises(Unsupported):
        load_fan([[1, 0], [-1, 0], [0, 1]], [[0, 1]], check_complete=False)


def test_incomplete_fan():
    with pytest.raises(NotComplete):
        load_fan([[1, 0], [0, 1], [-1, -1]], [[0, 1], [1, 2]])


def test_non_gorenstein_flag():
    # weighted projective plane P(1,1,3): cone <(1,0),(-1,-3)> has no integral deg
    fan = load_fan([[1, 0], [0, 1], [-1, -3]], [[0, 1], [1, 2], [0, 2]])
    assert not fan.gorenstein
    with pytest.raises(tc.NotGorenstein):
        fan.deg_on(fan.max_cones.index((0, 2)))


def test_fan_json_roundtrip():
    fan = load_fixture("p1xp1")
    again = tc.fan_from_json(json.loads(json.dumps(fan.to_json())))
    assert again.rays == fan.rays and again.max_cones == fan.max_cones


def test_fan_faces():
    fan = load_fixture("p2")
    # zero cone, three rays, three max cones
    assert len(fan.cones) == 7


# -- box data ------------------------------------------------------------------------

def test_box_unimodular():
    b = box_elements([[1, 0], [0, 1]])
    assert b.group_order == 1 and b.elements == ((0, 0),)


def test_box_order_two():
    b = box_elements([[1, 1], [1, -1]])
    assert b.group_order == 2
    assert sorted(b.elements) == [(0, 0), (1, 0)]
    assert b.dual_basis == ((Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 2), Fraction(-1, 2)))


def test_box_degenerate():
    with pytest.raises(ValidationError):
        box_elements([[1, 2], [2, 4]])


def test_box_dual_basis_and_count_random():
    import random
    rng = random.Random(4)
    for _ in range(20):
        rays = [[rng.randint(-3, 3) for _ in range(3)] for _ in range(3)]
        try:
            b = box_elements(rays)
        except ValidationError:
            continue
        assert len(b.elements) == b.group_order
        for i, m in enumerate(b.dual_basis):
            assert [sum(x * y for x, y in zip(m, r)) for r in rays] == [int(i == j) for j in range(3)]
        for c in b.coords:
            assert all(0 <= x < 1 for x in c)


# -- polytopes -------------------------------------------------------------------------

def test_quintic_dual():
    pair = dual_polytope(QUINTIC_DELTA)
    assert sorted(pair.delta_star) == sorted(QUINTIC_DSTAR)


def test_cross_polytope_and_square():
    cross = [[1, 0], [0, 1], [-1, 0], [0, -1]]
    pair = dual_polytope(cross)
    assert sorted(pair.delta_star) == sorted(itertools.product([-1, 1], repeat=2))
    back = dual_polytope([list(v) for v in pair.delta_star])
    assert sorted(back.delta_star) == sorted(tuple(v) for v in cross)


def test_mirror_swaps():
    pair = dual_polytope(QUINTIC_DELTA, "quintic")
    m = pair.mirror()
    assert m.delta == pair.delta_star and m.delta_star == pair.delta
    assert m.mirror().delta == pair.delta and m.deg == pair.deg_star


def test_not_reflexive():
    # the polar of this triangle has a vertex at (1/2, ...)
    with pytest.raises(NotReflexive):
        dual_polytope([[2, 0], [0, 1], [-1, -1]])


def test_origin_outside():
    with pytest.raises(ValidationError):
        dual_polytope([[1, 0], [0, 1], [1, 1]])


def test_lattice_points_dilation_zero():
    assert lattice_points(QUINTIC_DSTAR, 0) == [(0, 0, 0, 0)]


def test_lattice_points_quintic_star():
    assert len(lattice_points(QUINTIC_DSTAR, 1)) == 6


def test_lattice_points_quintic_delta():
    assert len(lattice_points(QUINTIC_DELTA, 1)) == comb(9, 4)


def test_lattice_points_deterministic():
    assert lattice_points(QUINTIC_DELTA) == sorted(lattice_points(QUINTIC_DELTA))


# -- subdivision ------------------------------------------------------------------------

def test_subdivide_simplex():
    pair = dual_polytope(QUINTIC_DELTA)
    fan = subdivide_simplicial(pair)
    assert len(fan.max_cones) == 5 and fan.smooth
    for cone in tc.kstar_cones(fan):
        assert cone[0] == pair.deg_star


def test_subdivide_mirror_quintic():
    pair = dual_polytope(QUINTIC_DELTA).mirror()
    fan = subdivide_simplicial(pair)
    assert len(fan.rays) == 125  # all nonzero lattice points of the old delta
    assert all(len(c) == 4 for c in fan.max_cones)


@pytest.mark.parametrize("order", ["lex", "revlex", "shuffle:1", "shuffle:2"])
def test_subdivision_orders_are_complete(order):
    pair = load_fixture("quartic_k3").mirror()
    fan = subdivide_simplicial(pair, order)
    total = sum(fan.box(c).group_order for c in fan.max_cones)
    # normalized volume of the mirror polytope's boundary is 64
    assert total == 64


def test_subdivision_bad_order():
    with pytest.raises(ValueError):
        subdivide_simplicial(load_fixture("quartic_k3"), "random")


# -- fixtures ---------------------------------------------------------------------------

def test_builtin_names():
    names = tc.builtin_names()
    assert {"p2", "quintic", "singular_threefold"} <= set(names)


def test_unknown_fixture():
    with pytest.raises(ValidationError, match="built-ins"):
        load_fixture("no-such-thing")


def test_fixture_from_path(tmp_path):
    path = tmp_path / "tri.json"
    path.write_text(json.dumps({"rank": 2, "rays": [[1, 0], [0, 1], [-1, -1]],
                                "max_cones": [[0, 1], [1, 2], [0, 2]]}))
    fan = load_fixture(str(path))
    assert fan.name == "tri" and fan.smooth
