import pytest

from arithdyn.errors import BadReduction, CharTooSmall, DegreeCapExceeded, MathDomainError
from arithdyn.exact import ddf_modp, Poly, prime_range
from arithdyn.projmap import (
    ProjPoint,
    ProjPointModP,
    RationalMap,
    apply,
    compose,
    critical_points_modp,
    good_reduction,
    iterate,
    reduce_map,
    reduce_point,
    wronskian,
)

from conftest import poly_map, pt


def test_reduce_point_examples():
    assert reduce_point(ProjPoint(3, 2), 5) == ProjPointModP(4, 1, 5)
    assert reduce_point(ProjPoint(1, 0), 7).is_infinity
    assert reduce_point(ProjPoint(5, 1), 5) == ProjPointModP(0, 1, 5)


def test_point_canonical_form():
    assert ProjPoint(-6, -4) == ProjPoint(3, 2)
    assert ProjPoint(-5, 0) == ProjPoint.infinity()
    with pytest.raises(MathDomainError):
        ProjPoint(0, 0)
    assert str(ProjPoint(-3, 6)) == "-1/2"


def test_good_reduction_examples(sq):
    assert all(good_reduction(sq, p) for p in prime_range(2, 100))
    assert good_reduction(RationalMap((5, 0, 1), (1, 0, 0), 2), 5)
    with pytest.raises(MathDomainError):
        RationalMap((0, 1, 0), (1, 0, 0), 2)  # [XY : Y^2] shares Y


def test_reduce_map_examples():
    r = reduce_map(poly_map(1, 0, 1), 3)
    assert (r.F, r.G) == ((1, 0, 1), (1, 0, 0))
    r = reduce_map(poly_map(0, 0, 1), 2)
    assert (r.F, r.G) == ((0, 0, 1), (1, 0, 0))
    with pytest.raises(BadReduction):
        reduce_map(poly_map(1, 0, 3), 3)


def test_compose_and_iterate_examples(sq):
    assert compose(sq, sq) == poly_map(0, 0, 0, 0, 1)
    f = poly_map(1, 0, 1)
    assert compose(f, f) == poly_map(2, 0, 2, 0, 1)
    with pytest.raises(DegreeCapExceeded):
        compose(sq, sq, cap=2)
    assert iterate(sq, 3) == RationalMap.polynomial((0,) * 8 + (1,))
    assert iterate(poly_map(-1, 0, 1), 2) == poly_map(0, 0, -2, 0, 1)
    with pytest.raises(DegreeCapExceeded):
        iterate(sq, 13)


def random_quadratic(rng):
    while True:
        try:
            return RationalMap.from_polys([rng.randint(-3, 3), rng.randint(-3, 3), rng.randint(1, 3)],
                                          [rng.randint(1, 3), rng.randint(-2, 2)])
        except MathDomainError:
            continue


def test_iterate_additive(rng):
    for _ in range(10):
        phi = random_quadratic(rng)
        for a, b in ((1, 2), (2, 1), (2, 2)):
            assert iterate(phi, a + b) == compose(iterate(phi, a), iterate(phi, b))


def test_apply_examples(sq):
    assert apply(sq, pt(3)) == pt(9)
    assert apply(sq, pt("inf")) == pt("inf")
    assert apply(RationalMap((1, 0, 1), (0, 1, 0), 2), ProjPoint(1, 1)) == pt(2)


def test_wronskian_examples(sq):
    assert wronskian(sq) == (0, 4, 0)  # 4XY
    assert wronskian(RationalMap((1, 0, 1), (0, 1, 0), 2)) == (-2, 0, 2)  # 2X^2 - 2Y^2
    for c in (-2, 1, 5):
        W = wronskian(poly_map(c, 0, 1))
        assert W[0] == 0 and W[2] == 0


def test_critical_points_modp_examples(sq):
    assert critical_points_modp(reduce_map(sq, 7)) == {ProjPointModP(0, 1, 7),
                                                      ProjPointModP(1, 0, 7)}
    with pytest.raises(CharTooSmall):
        critical_points_modp(reduce_map(sq, 3))
    cubic = poly_map(0, 1, 0, 1)
    crit = critical_points_modp(reduce_map(cubic, 11))
    scan = {ProjPointModP(x, 1, 11) for x in range(11) if (3 * x * x + 1) % 11 == 0}
    scan.add(ProjPointModP(1, 0, 11))  # polynomial maps are critical at infinity
    assert crit == scan


def test_reduction_commutes_with_apply():
    maps = [poly_map(0, 0, 1), poly_map(-1, 0, 1), RationalMap((1, 0, 1), (0, 1, 0), 2),
            RationalMap.from_polys([1, -2, 0, 3], [2, 1])]
    for phi in maps:
        for p in prime_range(2, 102):
            if not good_reduction(phi, p):
                continue
            rm = reduce_map(phi, p)
            for x in list(range(-20, 20)) + ["inf"]:
                P = pt(x)
                assert reduce_point(apply(phi, P), p) == apply(rm, reduce_point(P, p))


def test_good_reduction_polynomial_criterion(rng):
    # for polynomials the criterion is that the leading coefficient is a p-adic unit
    for _ in range(100):
        coeffs = [rng.randint(-30, 30) for _ in range(rng.randint(3, 6))]
        coeffs[-1] = rng.choice([1, -1]) * rng.randint(1, 60)
        phi = RationalMap.polynomial(coeffs)
        lead = phi.F[-1]
        p = rng.choice(list(prime_range(2, 60)))
        assert good_reduction(phi, p) == (lead % p != 0)


def test_critical_count_with_multiplicity(rng):
    for _ in range(20):
        phi = random_quadratic(rng)
        d = phi.d
        for p in (101, 103):
            if not good_reduction(phi, p):
                continue
            W = [c % p for c in wronskian(phi)]
            assert any(W)
            w = Poly(tuple(W), p)
            at_inf = 2 * d - 2 - w.degree  # multiplicity at infinity
            sqfree = w // w.gcd(w.derivative()) if w.degree > 0 else w
            parts = dict(ddf_modp(sqfree, p)) if sqfree.degree > 0 else {}
            linear = parts[1].degree if 1 in parts else 0
            crit = critical_points_modp(reduce_map(phi, p))
            assert len(crit) == linear + (1 if at_inf else 0)
            assert w.degree + at_inf == 2 * d - 2
