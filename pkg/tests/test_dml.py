import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arithdyn.dml import (
    ProgressionCover,
    SplitSystem,
    Subvariety,
    find_padic_certificate,
    fit_progressions,
    fixed_point_normalize,
    orbit_membership_scan,
)
from arithdyn.errors import (
    FitFailure,
    HeightOverflow,
    InvalidCycleData,
    NoCertificateFound,
    PeriodicInput,
)
from arithdyn.moddyn import image_table
from arithdyn.projmap import RationalMap, wronskian

from conftest import poly_map, pt

DIAG = Subvariety(2, [{(1, 0, 0, 1): 1, (0, 1, 1, 0): -1}])


def point_eq(c):
    return Subvariety(1, [{(1, 0): 1, (0, 1): -c}])


def test_scan_examples(sq):
    assert orbit_membership_scan(SplitSystem((sq, sq), (pt(2), pt(2))), DIAG, 12) == list(range(13))
    assert orbit_membership_scan(SplitSystem((sq,), (pt(2),)), point_eq(4), 15) == [1]
    assert orbit_membership_scan(SplitSystem((sq, sq), (pt(2), pt(4))), DIAG, 15) == []


def test_scan_analytic(sq):
    for c, n in ((2, 0), (4, 1), (16, 2), (256, 3)):
        assert orbit_membership_scan(SplitSystem((sq,), (pt(2),)), point_eq(c), 12) == [n]


def test_scan_through_infinity():
    # 1/x^2 swaps 0 and infinity; the pair (0, inf) hits X1*X2 = 0 every step
    phi = RationalMap((1, 0, 0), (0, 0, 1), 2)
    V = Subvariety(1, [{(0, 1): 1}])  # Y1 = 0, i.e. the point at infinity
    assert orbit_membership_scan(SplitSystem((phi,), (pt(0),)), V, 6) == [1, 3, 5]


def test_height_overflow(sq):
    with pytest.raises(HeightOverflow) as exc:
        orbit_membership_scan(SplitSystem((sq,), (pt(2),)), point_eq(4), 40)
    assert exc.value.partial == [1] and exc.value.index == 22


def test_subvariety_homogeneity():
    with pytest.raises(ValueError):
        Subvariety(1, [{(1, 0): 1, (0, 0): -4}])


def test_fit_examples():
    c = fit_progressions(list(range(61)), 60)
    assert (c.M, c.exceptional, c.progressions) == (0, (), ((1, 0),))
    c = fit_progressions([1], 60)
    assert (c.M, c.exceptional, c.progressions) == (2, (1,), ())
    c = fit_progressions(list(range(0, 61, 2)) + [3], 60)
    assert (c.M, c.exceptional, c.progressions) == (4, (0, 2, 3), ((2, 0),))
    assert c.to_dict() == {"M": 4, "exceptional": [0, 2, 3], "progressions": [[2, 0]]}


def test_fit_failure():
    r = random.Random(4)
    S = sorted(r.sample(range(61), 30))
    with pytest.raises(FitFailure) as exc:
        fit_progressions(S, 60)
    assert exc.value.indices == S


@st.composite
def covers(draw):
    N = draw(st.integers(40, 120))
    k = draw(st.integers(1, N // 8))
    M = draw(st.integers(0, N // 4))
    residues = draw(st.sets(st.integers(0, k - 1)))
    exc = draw(st.sets(st.integers(0, max(M - 1, 0)))) if M else set()
    return ProgressionCover(M, N, tuple(sorted(exc)), tuple((k, l) for l in sorted(residues)))


@settings(max_examples=200, deadline=None)
@given(covers())
def test_fit_round_trip(cover):
    S = [n for n, b in enumerate(cover.indicator()) if b]
    fitted = fit_progressions(S, cover.N)
    assert fitted.indicator() == cover.indicator()
    assert fitted.M <= cover.M


def test_certificate_examples(sq):
    sys3 = SplitSystem((sq,), (pt(3),))
    assert find_padic_certificate(sys3, 100).p == 5
    cert = find_padic_certificate(sys3, 100, pmin=6)
    assert cert.p == 7 and cert.orbits == ((3, 2, 4),)
    with pytest.raises(PeriodicInput):
        find_padic_certificate(SplitSystem((sq,), (pt(0),)), 100)
    with pytest.raises(NoCertificateFound):
        find_padic_certificate(SplitSystem((poly_map(1, 0, 0, 1),), (pt(2),)), 5)


def test_certificate_soundness(rng):
    maps = [poly_map(0, 0, 1), poly_map(1, 0, 1), poly_map(-1, 1, 1), poly_map(0, 1, 0, 1)]
    for _ in range(30):
        g = rng.randint(1, 2)
        ms = tuple(rng.choice(maps) for _ in range(g))
        starts = tuple(pt(rng.randint(2, 40)) for _ in range(g))
        try:
            cert = find_padic_certificate(SplitSystem(ms, starts), 2000, mode=rng.choice(["strict", "relaxed"]))
        except (PeriodicInput, NoCertificateFound):
            continue
        p = cert.p
        for phi, x, shape in zip(ms, starts, cert.shapes):
            img = image_table(_reduced(phi, p))
            W = wronskian(phi)
            idx = x.x * pow(x.y, -1, p) % p
            orbit = []
            while idx not in orbit:
                orbit.append(idx)
                idx = int(img[idx])
            assert len(orbit) == shape.tail + shape.period
            watched = orbit if cert.mode == "strict" else orbit[shape.tail:]
            for z in watched:
                if z == p:
                    assert W[-1] % p != 0
                else:
                    assert sum(c * z**i for i, c in enumerate(W)) % p != 0


def _reduced(phi, p):
    from arithdyn.projmap import reduce_map
    return reduce_map(phi, p)


def test_normalize_examples(sq):
    same = fixed_point_normalize(SplitSystem((sq,), (pt(1),)), {0: (0, 1)})
    assert same.system == SplitSystem((sq,), (pt(1),)) and same.stride == 1
    two = fixed_point_normalize(SplitSystem((poly_map(-1, 0, 1),), (pt(0),)), {0: (0, 2)})
    assert two.system.maps[0] == poly_map(0, 0, -2, 0, 1)
    assert two.system.start == (pt(0),)
    with pytest.raises(InvalidCycleData):
        fixed_point_normalize(SplitSystem((poly_map(-1, 0, 1),), (pt(0),)), {0: (0, 1)})
    with pytest.raises(InvalidCycleData):
        fixed_point_normalize(SplitSystem((poly_map(-1, 0, 1),), (pt(0),)), {0: (0, 4)})


def test_normalize_translation():
    phi = poly_map(-1, 0, 1)
    original = SplitSystem((phi, poly_map(0, 0, 1)), (pt(0), pt(1)))
    # phi^n(0) = -1 with the second coordinate anything: X1 + Y1 = 0 (degree 0 in pair 2)
    V = Subvariety(2, [{(1, 0, 0, 0): 1, (0, 1, 0, 0): 1}])
    N = 20
    S = orbit_membership_scan(original, V, N)
    norm = fixed_point_normalize(original, {0: (0, 2)})
    per_branch = [orbit_membership_scan(b, V, N // 2) for b in norm.branches]
    back = [n for n in norm.original_indices(per_branch) if n <= N]
    assert back == S == list(range(1, N + 1, 2))
