"""Fans, reflexive polytopes, Box sets and simplicial subdivisions."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd, lcm
from typing import Dict, List, Optional, Sequence, Tuple

from . import linalg

Vector = Tuple[int, ...]


class ToricError(ValueError):
    pass


class ValidationError(ToricError):
    pass


class Unsupported(ToricError):
    pass


class NotComplete(ToricError):
    pass


class NotGorenstein(ToricError):
    pass


class NotReflexive(ToricError):
    pass


def _dot(a: Sequence, b: Sequence):
    return sum(x * y for x, y in zip(a, b))


def _is_primitive(v: Sequence[int]) -> bool:
    g = 0
    for x in v:
        g = gcd(g, int(x))
    return g == 1


# --------------------------------------------------------------------------
# Box data
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxData:
    """Lattice points of a simplicial cone with ray coordinates in [0, 1)."""

    rays: Tuple[Vector, ...]
    group_order: int
    elements: Tuple[Vector, ...]
    coords: Tuple[Tuple[Fraction, ...], ...]
    dual_basis: Tuple[Tuple[Fraction, ...], ...]

    @property
    def exponent(self) -> int:
        """Exponent of the group N / sum Z n_i."""
        e = 1
        for c in self.coords:
            for x in c:
                e = lcm(e, x.denominator)
        return e


def box_elements(cone_rays: Sequence[Sequence[int]], ambient_rank: Optional[int] = None) -> BoxData:
    """Box set and dual basis of a full-dimensional simplicial cone.

    For a lower-dimensional cone the box lives in the sublattice spanned by
    the rays' saturation; only full-rank cones are used by the engines, so
    the rays must form a square nonsingular matrix.
    """
    rays = [tuple(int(x) for x in r) for r in cone_rays]
    k = len(rays)
    if k == 0:
        return BoxData((), 1, ((),), ((),), ())
    n = len(rays[0])
    if k != n:
        return _box_lower(rays)
    dt = linalg.det(rays)
    if dt == 0:
        raise ValidationError("degenerate cone rays")
    # column j of U^{-T}: coordinates of e_j in the ray basis
    coords_of = linalg.inverse(linalg.transpose(rays))  # rows: coordinate functionals
    dual = tuple(tuple(row) for row in coords_of)  # m_i with m_i . n_j = delta_ij
    gens = []
    for j in range(n):
        c = tuple(coords_of[i][j] - (coords_of[i][j].numerator // coords_of[i][j].denominator)
                  for i in range(k))
        gens.append(c)
    elems = _close_group(gens, k)
    order = abs(int(dt))
    if len(elems) != order:
        raise ValidationError("box enumeration does not match the determinant")
    pts = []
    for c in elems:
        v = [sum(c[i] * rays[i][j] for i in range(k)) for j in range(n)]
        pts.append(tuple(int(x) for x in v))
    return BoxData(tuple(rays), order, tuple(pts), tuple(elems), dual)


def _box_lower(rays: List[Vector]) -> BoxData:
    """Box of a lower-dimensional simplicial cone (points of the saturated span)."""
    k, n = len(rays), len(rays[0])
    # points sum c_i n_i with c in [0,1) that are integral: solve in a complementary basis
    gens: List[Tuple[Fraction, ...]] = []
    if linalg.rank(rays) != k:
        raise ValidationError("degenerate cone rays")
    # search integer points in the half-open parallelepiped by bounding box
    lo = [sum(min(0, r[j]) for r in rays) for j in range(n)]
    hi = [sum(max(0, r[j]) for r in rays) for j in range(n)]
    tr = linalg.transpose(rays)
    elems = []
    pts = []
    for p in itertools.product(*[range(lo[j], hi[j] + 1) for j in range(n)]):
        c = linalg.solve(tr, list(p))
        if c is None:
            continue
        if linalg.mat_vec(tr, c) != [Fraction(x) for x in p]:
            continue
        if all(0 <= x < 1 for x in c):
            elems.append(tuple(c))
            pts.append(tuple(p))
    order = len(elems)
    return BoxData(tuple(rays), order, tuple(pts), tuple(elems), ())


def _close_group(gens: List[Tuple[Fraction, ...]], k: int) -> List[Tuple[Fraction, ...]]:
    zero = tuple(Fraction(0) for _ in range(k))
    seen = {zero}
    order = [zero]
    frontier = [zero]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = tuple((x + y) - ((x + y).numerator // (x + y).denominator) for x, y in zip(a, g))
                if b not in seen:
                    seen.add(b)
                    order.append(b)
                    nxt.append(b)
        frontier = nxt
    return sorted(order)


# --------------------------------------------------------------------------
# Fans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Fan:
    rank: int
    rays: Tuple[Vector, ...]
    max_cones: Tuple[Tuple[int, ...], ...]
    smooth: bool
    gorenstein: bool
    deg_data: Tuple[Optional[Tuple[Fraction, ...]], ...]
    name: str = ""

    @cached_property
    def cones(self) -> Tuple[Tuple[int, ...], ...]:
        """All faces of the max cones, including the zero cone, sorted."""
        faces = set()
        for c in self.max_cones:
            for k in range(len(c) + 1):
                for sub in itertools.combinations(sorted(c), k):
                    faces.add(sub)
        return tuple(sorted(faces, key=lambda f: (len(f), f)))

    def box(self, cone: Sequence[int]) -> BoxData:
        return box_elements([self.rays[i] for i in cone])

    def deg_on(self, cone_index: int) -> Tuple[Fraction, ...]:
        d = self.deg_data[cone_index]
        if d is None:
            raise NotGorenstein("fan is not Gorenstein")
        return d

    def to_json(self) -> dict:
        return {"rank": self.rank, "rays": [list(r) for r in self.rays],
                "max_cones": [list(c) for c in self.max_cones]}


def load_fan(rays: Sequence[Sequence[int]], max_cones: Sequence[Sequence[int]], name: str = "",
             check_complete: bool = True) -> Fan:
    """Validate fan data and compute smoothness and Gorenstein data."""
    if not rays:
        raise ValidationError("a fan needs rays")
    rank = len(rays[0])
    rays_t = tuple(tuple(int(x) for x in r) for r in rays)
    for r in rays_t:
        if len(r) != rank:
            raise ValidationError("rays of mixed rank")
        if not _is_primitive(r):
            raise ValidationError(f"ray {r} is not primitive")
    cones_t = tuple(tuple(int(i) for i in c) for c in max_cones)
    smooth = True
    deg_data: List[Optional[Tuple[Fraction, ...]]] = []
    for c in cones_t:
        if any(i < 0 or i >= len(rays_t) for i in c):
            raise ValidationError(f"cone {c} references a missing ray")
        if len(c) != rank:
            raise Unsupported(f"cone {c} is not full-dimensional simplicial")
        mat = [rays_t[i] for i in c]
        dt = linalg.det(mat)
        if dt == 0:
            raise Unsupported(f"cone {c} is not simplicial")
        if abs(dt) != 1:
            smooth = False
        m = linalg.solve(mat, [1] * rank)
        if m is None or any(x.denominator != 1 for x in m):
            deg_data.append(None)
        else:
            deg_data.append(tuple(m))
    gorenstein = all(d is not None for d in deg_data)
    if check_complete:
        facets: Dict[Tuple[int, ...], int] = {}
        for c in cones_t:
            for sub in itertools.combinations(sorted(c), rank - 1):
                facets[sub] = facets.get(sub, 0) + 1
        bad = [f for f, k in facets.items() if k != 2]
        if bad:
            raise NotComplete(f"facet {bad[0]} is not shared by exactly two cones")
    return Fan(rank, rays_t, cones_t, smooth, gorenstein, tuple(deg_data), name)


def fan_from_json(data: dict, name: str = "") -> Fan:
    return load_fan(data["rays"], data["max_cones"], name or data.get("name", ""))


# --------------------------------------------------------------------------
# Polytopes
# --------------------------------------------------------------------------

def facet_inequalities(vertices: Sequence[Sequence[int]]) -> List[Tuple[Tuple[Fraction, ...], Fraction]]:
    """Facets of conv(vertices) as pairs (u, b) meaning u . x >= b, u primitive integral."""
    verts = [tuple(int(x) for x in v) for v in vertices]
    n = len(verts[0])
    if linalg.rank([[a - b for a, b in zip(v, verts[0])] for v in verts[1:]]) != n:
        raise ValidationError("polytope is not full-dimensional")
    found = set()
    for subset in itertools.combinations(range(len(verts)), n):
        base = verts[subset[0]]
        diffs = [[a - b for a, b in zip(verts[i], base)] for i in subset[1:]]
        ns = linalg.nullspace(diffs, n)
        if len(ns) != 1:
            continue
        u = linalg.primitive_integer(ns[0])
        vals = [_dot(u, v) for v in verts]
        b = _dot(u, base)
        if all(x >= b for x in vals):
            found.add((tuple(u), b))
        elif all(x <= b for x in vals):
            found.add((tuple(-x for x in u), -b))
    return sorted((tuple(Fraction(x) for x in u), Fraction(b)) for u, b in found)


def polar_vertices(vertices: Sequence[Sequence[int]]) -> List[Tuple[Fraction, ...]]:
    """Vertices of {n : v . n >= -1 for all vertices v}; the origin must be interior."""
    out = []
    for u, b in facet_inequalities(vertices):
        if b >= 0:
            raise ValidationError("origin is not interior")
        out.append(tuple(x / -b for x in u))
    return sorted(out)


def _contains_origin_strictly(vertices: Sequence[Sequence[int]]) -> bool:
    return all(b < 0 for _, b in facet_inequalities(vertices))


def lattice_points(vertices: Sequence[Sequence[int]], h: int = 1) -> List[Vector]:
    """Lattice points of h * conv(vertices), lexicographically sorted."""
    verts = [tuple(int(x) for x in v) for v in vertices]
    n = len(verts[0])
    if h == 0:
        return [tuple([0] * n)]
    ineqs = [(tuple(int(x) for x in u), int(h * b)) for u, b in facet_inequalities(verts)]
    lo = [h * min(v[j] for v in verts) for j in range(n)]
    hi = [h * max(v[j] for v in verts) for j in range(n)]
    # best[k][f]: largest value coordinates k.. can add to facet f inside the box,
    # used to prune a partial point that no completion can rescue
    best = [[0] * len(ineqs) for _ in range(n + 1)]
    for k in range(n - 1, -1, -1):
        for f, (u, _) in enumerate(ineqs):
            best[k][f] = best[k + 1][f] + max(u[k] * lo[k], u[k] * hi[k])
    pts: List[Vector] = []
    partial = [0] * len(ineqs)
    prefix: List[int] = []

    def walk(k: int) -> None:
        if k == n:
            pts.append(tuple(prefix))
            return
        for x in range(lo[k], hi[k] + 1):
            ok = True
            for f, (u, b) in enumerate(ineqs):
                partial[f] += u[k] * x
                if partial[f] + best[k + 1][f] < b:
                    ok = False
            if ok:
                prefix.append(x)
                walk(k + 1)
                prefix.pop()
            for f, (u, _) in enumerate(ineqs):
                partial[f] -= u[k] * x

    walk(0)
    return pts


@dataclass(frozen=True)
class ReflexivePair:
    """Dual reflexive polytopes; the cones K, K* live one rank higher with height last.

    ``delta`` is the polytope in M (the Newton polytope side) and
    ``delta_star`` the polytope in N whose lattice points give the rays.
    deg and deg* are the last unit vectors.
    """

    delta: Tuple[Vector, ...]
    delta_star: Tuple[Vector, ...]
    name: str = ""

    @property
    def dim(self) -> int:
        """Dimension of the polytopes (the ambient toric variety)."""
        return len(self.delta[0])

    @property
    def cy_dim(self) -> int:
        return self.dim - 1

    @property
    def deg(self) -> Vector:
        return tuple([0] * self.dim + [1])

    deg_star = deg

    def mirror(self) -> "ReflexivePair":
        name = self.name[:-7] if self.name.endswith("-mirror") else (self.name + "-mirror" if self.name else "")
        return ReflexivePair(self.delta_star, self.delta, name)

    def kstar_rays(self) -> List[Vector]:
        """Generators (v, 1) of K* for vertices v of delta_star."""
        return [tuple(v) + (1,) for v in self.delta_star]

    def is_simplex_star(self) -> bool:
        return len(self.delta_star) == self.dim + 1

    def to_json(self) -> dict:
        return {"rank": self.dim, "vertices": [list(v) for v in self.delta]}


def dual_polytope(vertices: Sequence[Sequence[int]], name: str = "") -> ReflexivePair:
    """Assemble the reflexive pair from the vertices of delta."""
    verts = sorted(tuple(int(x) for x in v) for v in vertices)
    if not _contains_origin_strictly(verts):
        raise ValidationError("origin is not interior")
    polar = polar_vertices(verts)
    if any(x.denominator != 1 for p in polar for x in p):
        raise NotReflexive("polar dual has a non-integral vertex")
    dstar = tuple(sorted(tuple(int(x) for x in p) for p in polar))
    # reflexivity both ways and vertex-minimality of delta
    back = polar_vertices(dstar)
    if sorted(tuple(int(x) for x in p) for p in back) != verts:
        raise ValidationError("input points are not exactly the vertices of their hull")
    for poly in (verts, dstar):
        ineqs = facet_inequalities(poly)
        interior = [p for p in lattice_points(poly) if all(_dot(u, p) > b for u, b in ineqs)]
        if interior != [tuple([0] * len(poly[0]))]:
            raise NotReflexive("origin is not the unique interior lattice point")
    return ReflexivePair(tuple(verts), dstar, name)


def polytope_from_json(data: dict, name: str = "") -> ReflexivePair:
    return dual_polytope(data["vertices"], name or data.get("name", ""))


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# Subdivisions
# --------------------------------------------------------------------------

def _facets(pair: ReflexivePair) -> List[Tuple[Vector, List[Vector]]]:
    """Facets of delta_star as (inner normal m in delta, lattice points on the facet)."""
    pts = lattice_points(pair.delta_star)
    out = []
    for m in pair.delta:
        on = [p for p in pts if _dot(m, p) == -1]
        out.append((m, on))
    return out


def _orient(rows: Sequence[Sequence[Fraction]]) -> int:
    d = linalg.det(rows)
    return (d > 0) - (d < 0)


def placing_triangulation(points: Sequence[Sequence], order: Sequence[int]) -> List[Tuple[int, ...]]:
    """Placing triangulation of a point set, inserting points in the given order.

    Returns maximal simplices as sorted index tuples.  Points in the convex
    hull of earlier points are skipped.
    """
    pts = [tuple(Fraction(x) for x in p) for p in points]
    if not order:
        return []
    first = order[0]
    basis = [first]  # affinely independent points spanning the current hull
    simplices: List[Tuple[int, ...]] = [(first,)]

    def hull_coords(v):
        base = pts[basis[0]]
        vecs = [[a - b for a, b in zip(pts[i], base)] for i in basis[1:]]
        if not vecs:
            return []
        return linalg.solve(linalg.transpose(vecs), [a - b for a, b in zip(v, base)])

    def in_span(p):
        base = pts[basis[0]]
        vecs = [[a - b for a, b in zip(pts[i], base)] for i in basis[1:]]
        diff = [a - b for a, b in zip(pts[p], base)]
        return linalg.rank(vecs + [diff]) == len(vecs)

    for p in order[1:]:
        if not in_span(p):
            basis.append(p)
            simplices = [tuple(sorted(s + (p,))) for s in simplices]
            continue
        dim = len(basis) - 1
        if dim == 0:
            continue
        # boundary facets of the current triangulation
        count: Dict[Tuple[int, ...], List[Tuple[int, ...]]] = {}
        for s in simplices:
            for f in itertools.combinations(s, dim):
                count.setdefault(f, []).append(s)
        new = []
        cp = hull_coords(pts[p])
        for f, owners in count.items():
            if len(owners) != 1:
                continue
            s = owners[0]
            opp = next(i for i in s if i not in f)
            fc = [hull_coords(pts[i]) for i in f]
            rows_p = [[a - b for a, b in zip(x, fc[0])] for x in fc[1:]]
            sp = _orient(rows_p + [[a - b for a, b in zip(cp, fc[0])]])
            so = _orient(rows_p + [[a - b for a, b in zip(hull_coords(pts[opp]), fc[0])]])
            if sp != 0 and sp == -so:
                new.append(tuple(sorted(f + (p,))))
        simplices.extend(new)
    return sorted(simplices)


def subdivide_simplicial(pair: ReflexivePair, order: str = "lex") -> Fan:
    """Simplicial fan over K* whose max cones all contain deg*.

    Each facet of delta_star is triangulated by a placing triangulation of
    its lattice points (insertion order ``lex``, ``revlex`` or a seeded
    ``shuffle:<seed>``), and every
    simplex is coned from the interior point; lifting to height one gives
    cones of K* that contain deg* = (0, ..., 0, 1).
    """
    pts = lattice_points(pair.delta_star)
    index = {p: i for i, p in enumerate(pts)}
    cones = set()
    if order.startswith("shuffle:"):
        # one global order keeps the triangulations of adjacent facets compatible
        import random
        perm = list(range(len(pts)))
        random.Random(int(order.split(":", 1)[1])).shuffle(perm)
        rank = {i: k for k, i in enumerate(perm)}
    for m, on in _facets(pair):
        ids = sorted(index[p] for p in on)
        if order == "revlex":
            ids = ids[::-1]
        elif order.startswith("shuffle:"):
            ids.sort(key=rank.__getitem__)
        elif order != "lex":
            raise ValueError("order must be 'lex', 'revlex' or 'shuffle:<seed>'")
        for s in placing_triangulation(pts, ids):
            cones.add(s)
    used = sorted({i for s in cones for i in s})
    ray_ids = {i: k for k, i in enumerate(used)}
    zero = tuple([0] * pair.dim)
    rays = [tuple(pts[i]) for i in used]
    max_cones = sorted(tuple(sorted(ray_ids[i] for i in s)) for s in cones)
    return load_fan(rays, max_cones, f"{pair.name}-subdivision-{order}")


def kstar_cones(fan: Fan) -> List[List[Vector]]:
    """Lift a fan on delta_star to cones of K*, each starting with deg*."""
    rank = fan.rank
    deg_star = tuple([0] * rank + [1])
    return [[deg_star] + [tuple(fan.rays[i]) + (1,) for i in c] for c in fan.max_cones]


# --------------------------------------------------------------------------
# Built-in fixtures
# --------------------------------------------------------------------------

def builtin_names() -> List[str]:
    from importlib import resources
    return sorted(p.name[:-5] for p in resources.files("ellgenus").joinpath("data").iterdir()
                  if p.name.endswith(".json"))


def load_fixture(name_or_path: str):
    """A Fan or ReflexivePair from a built-in name or a JSON file path.

    Files with a ``rays`` key describe fans; files with ``vertices`` describe
    the polytope delta of a reflexive pair.
    """
    from importlib import resources
    import os
    if os.path.exists(name_or_path):
        data = load_json(name_or_path)
        default = os.path.splitext(os.path.basename(name_or_path))[0]
    else:
        res = resources.files("ellgenus").joinpath("data", f"{name_or_path}.json")
        if not res.is_file():
            raise ValidationError(f"unknown fixture {name_or_path!r}; built-ins: {', '.join(builtin_names())}")
        data = json.loads(res.read_text())
        default = name_or_path
    if "rays" in data:
        return fan_from_json(data, data.get("name", default))
    if "vertices" in data:
        return polytope_from_json(data, data.get("name", default))
    raise ValidationError("fixture needs either 'rays' or 'vertices'")
