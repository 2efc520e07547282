"""Piecewise-linear map algebra: randomized property suites.

Maps are generated with exact rational nodes; every law is checked for
exact equality of canonical forms, never approximately.
"""

import random
from fractions import Fraction

import pytest

from renormlab import (
    CircleLift,
    PLMap,
    breaks_of,
    build_f0,
    compose,
    conjugate_by_translation,
    evaluate,
    evaluate_inverse,
    from_nodes,
    identity_map,
    invert,
    iterate_k,
    restrict,
    rigid_rotation,
    translation_map,
)
from renormlab.errors import CompositionError, ConstructionError
from renormlab.rational import RatInterval


def random_onto_map(rng: random.Random, max_interior: int = 4) -> PLMap:
    """Random increasing PL bijection of [0, 1] with rational nodes."""

    def interior(count: int) -> list[Fraction]:
        pts: set[Fraction] = set()
        while len(pts) < count:
            pts.add(Fraction(rng.randrange(1, 64), 64) + Fraction(rng.randrange(3), 192))
        return sorted(p for p in pts if 0 < p < 1)

    count = rng.randrange(0, max_interior + 1)
    xs = [Fraction(0)] + interior(count) + [Fraction(1)]
    ys = [Fraction(0)] + interior(len(xs) - 2) + [Fraction(1)]
    while len(ys) != len(xs):
        ys = [Fraction(0)] + interior(len(xs) - 2) + [Fraction(1)]
    return from_nodes(zip(xs, ys))


def random_points(rng: random.Random, f: PLMap, count: int) -> list[Fraction]:
    lo, hi = f.domain.lo, f.domain.hi
    return [
        lo + (hi - lo) * Fraction(rng.randrange(1, 997), 997) for _ in range(count)
    ]


def test_compose_associativity_suite():
    rng = random.Random(101)
    for _ in range(350):
        f, g, h = (random_onto_map(rng) for _ in range(3))
        left = compose(h, compose(g, f))
        right = compose(compose(h, g), f)
        assert left.xs == right.xs and left.ys == right.ys


def test_inverse_suite():
    rng = random.Random(202)
    ident = identity_map(Fraction(0), Fraction(1))
    for _ in range(200):
        f = random_onto_map(rng)
        assert invert(invert(f)) == f
        round_trip = compose(invert(f), f)
        assert round_trip == ident
        for x in random_points(rng, f, 2):
            assert evaluate_inverse(f, evaluate(f, x)) == x


def test_restriction_consistency_suite():
    rng = random.Random(303)
    for _ in range(150):
        f = random_onto_map(rng)
        u = Fraction(rng.randrange(0, 40), 100)
        v = u + Fraction(rng.randrange(10, 55), 100)
        sub = restrict(f, RatInterval(u, v))
        assert sub.domain.lo == u and sub.domain.hi == v
        for x in random_points(rng, sub, 3):
            assert evaluate(sub, x) == evaluate(f, x)
        # restriction then restriction = one restriction
        w = RatInterval(u + (v - u) / 4, v - (v - u) / 4)
        assert restrict(sub, w) == restrict(f, w)


def test_slope_product_suite():
    rng = random.Random(404)
    for _ in range(150):
        f, g = random_onto_map(rng), random_onto_map(rng)
        gf = compose(g, f)
        for x in random_points(rng, f, 3):
            if x in gf.xs or x in f.xs or evaluate(f, x) in g.xs:
                continue  # slope undefined at a node
            sf = _slope_at(f, x)
            sg = _slope_at(g, evaluate(f, x))
            assert _slope_at(gf, x) == sf * sg


def _slope_at(f: PLMap, x: Fraction) -> Fraction:
    for i in range(len(f.xs) - 1):
        if f.xs[i] <= x < f.xs[i + 1]:
            return (f.ys[i + 1] - f.ys[i]) / (f.xs[i + 1] - f.xs[i])
    raise AssertionError("point outside the domain")


def test_serialization_round_trip_suite():
    rng = random.Random(505)
    for _ in range(150):
        f = random_onto_map(rng)
        assert PLMap.from_json(f.to_json()) == f


def test_canonicalization_drops_collinear_nodes():
    f = from_nodes(
        [
            (Fraction(0), Fraction(0)),
            (Fraction(1, 4), Fraction(1, 4)),  # collinear with neighbors
            (Fraction(1, 2), Fraction(1, 2)),
            (Fraction(1), Fraction(3, 2)),
        ]
    )
    assert f.node_count() == 3
    assert f.slopes() == (Fraction(1), Fraction(2))


def test_plmap_validation():
    with pytest.raises(ConstructionError):
        PLMap((Fraction(0), Fraction(0)), (Fraction(0), Fraction(1)))
    with pytest.raises(ConstructionError):
        PLMap((Fraction(0), Fraction(1)), (Fraction(1), Fraction(0)))


def test_compose_domain_guard():
    f = translation_map(Fraction(0), Fraction(1), Fraction(2))
    g = identity_map(Fraction(0), Fraction(1))
    with pytest.raises(CompositionError):
        compose(g, f)


def test_iterate_k_matches_pointwise_orbit():
    rng = random.Random(606)
    f = random_onto_map(rng)
    seed = RatInterval(Fraction(1, 8), Fraction(3, 8))
    fk = iterate_k(f, 3, seed)
    for x in random_points(rng, fk, 4):
        y = x
        for _ in range(3):
            y = evaluate(f, y)
        assert evaluate(fk, x) == y


def test_circle_lift_validation():
    base = from_nodes([(Fraction(0), Fraction(1, 3)), (Fraction(1), Fraction(4, 3))])
    lift = CircleLift(base)
    assert lift.rotation_offset() == Fraction(1, 3)
    with pytest.raises(ConstructionError):
        CircleLift(from_nodes([(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1))]))


def test_circle_lift_periodicity_and_inverse():
    lift = rigid_rotation(Fraction(2, 7))
    x = Fraction(5, 11)
    assert lift.lift_value(x + 3) == lift.lift_value(x) + 3
    y = lift.apply(x)
    assert lift.apply_inverse(y) == x


def test_model_map_break_structure(default_sol):
    lift = build_f0(default_sol)
    brs = lift.breaks()
    sizes = sorted(b.size for b in brs)
    assert sizes == [Fraction(1, 2), Fraction(1, 2), Fraction(2), Fraction(2)]
    assert 0 < lift.rotation_offset() < 1
    assert brs[0].location == 0  # the wrap break sits at the marked point


def test_conjugate_by_translation_moves_breaks():
    base = from_nodes(
        [
            (Fraction(0), Fraction(0)),
            (Fraction(1, 3), Fraction(1, 2)),
            (Fraction(1), Fraction(1)),
        ]
    )
    shifted = conjugate_by_translation(base, Fraction(1, 6))
    assert shifted.domain.lo == Fraction(-1, 6)
    assert [b.location for b in breaks_of(shifted)] == [Fraction(1, 6)]
    assert [b.size for b in breaks_of(shifted)] == [b.size for b in breaks_of(base)]
