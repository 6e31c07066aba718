import numpy as np
import pytest

from arithdyn.chebsweep import (
    _batch_counts,
    _scalar_record,
    TargetSystem,
    augment_targets,
    build_iterate_poly,
    compute_chunk,
    derangement_density,
    independence_report,
    root_count_modp,
    sweep,
)
from arithdyn.errors import BadPrime, DegreeCapExceeded, EmptySystem, InsufficientData, PeriodicInput
from arithdyn.exact import prime_range
from arithdyn.moddyn import image_table, orbit_shape
from arithdyn.projmap import RationalMap, good_reduction, reduce_map, reduce_point

from conftest import poly_map, pt


def system(phi, targets, m):
    return TargetSystem(((phi, tuple(pt(t) for t in targets)),), m)


def test_iterate_poly_examples(sq):
    assert build_iterate_poly(sq, pt(3), 1).f.coeffs == (-3, 0, 1)
    assert build_iterate_poly(sq, pt(3), 2).f.coeffs == (-3, 0, 0, 0, 1)
    ip = build_iterate_poly(poly_map(1, 0, 1), pt("inf"), 1)
    assert ip.f.degree == 0 and ip.infinity_preimage(5)


def test_root_count_examples(sq):
    ip = build_iterate_poly(sq, pt(3), 1)
    assert root_count_modp(ip, 5) == 0
    assert root_count_modp(ip, 11) == 2
    with pytest.raises(BadPrime):
        root_count_modp(ip, 2)
    assert ip.disc_bad_primes == {2, 3}


def test_sweep_examples(sq):
    recs = {r.p: r for r in sweep(system(sq, [3, 5, 7], 1), 8, 100).records}
    assert recs[17].derangement
    for p, r in recs.items():
        nonres = all(pow(a, (p - 1) // 2, p) == p - 1 for a in (3, 5, 7))
        assert r.derangement == nonres
    r = sweep(system(sq, [3], 1), 11, 12).records[0]
    assert r.root_counts == ((2,),) and not r.derangement
    with pytest.raises(EmptySystem):
        TargetSystem(((sq, ()),), 1)


def test_density_examples(sq):
    est = derangement_density(system(sq, [3], 1), 4, 100)
    assert (est.hits, est.eligible) == (12, 23)
    with pytest.raises(PeriodicInput):
        system(sq, [1], 1)


def test_degree_cap(sq):
    with pytest.raises(DegreeCapExceeded):
        system(sq, [3], 13)


def test_augment_examples(sq):
    s = augment_targets(system(sq, [2], 1), [(0, 0, 1)])
    assert s.entries[0][1] == (pt(2), pt(4))
    s = augment_targets(system(poly_map(-1, 0, 1), [3], 1), [(0, 0, 2)])
    assert s.entries[0][1] == (pt(3), pt(63))
    s = augment_targets(system(sq, [2], 1), [(0, 0, 0)])
    assert s.entries[0][1] == (pt(2),)


def test_independence_examples(sq):
    rep = independence_report(system(sq, [2, 8], 2), 3, 10**5)
    assert abs(rep.ratio - 1) > 0.1
    with pytest.raises(InsufficientData):
        independence_report(system(sq, [3], 1), 3, 1000)
    rep = independence_report(system(sq, [3, 5, 7], 3), 3, 20000)
    assert rep.dof == 4 and rep.chi_square is not None


def test_batch_engine_matches_scalar(rng):
    primes = np.array(list(prime_range(3, 20000)), dtype=np.int64)
    done = 0
    while done < 30:
        phi = RationalMap.polynomial([rng.randint(-50, 50), rng.randint(-5, 5), rng.randint(1, 4)])
        alpha = pt(rng.randint(-10**6, 10**6))
        try:
            ip = build_iterate_poly(phi, alpha, rng.randint(1, 3))
        except PeriodicInput:
            continue
        P = primes[rng.sample(range(len(primes)), 60)]
        P = P[[p > phi.d and good_reduction(phi, int(p)) for p in P.tolist()]]
        ok, counts, _ = _batch_counts(ip, P)
        for i, p in enumerate(P.tolist()):
            assert bool(ok[i]) == (not ip.is_bad(p))
            if ok[i]:
                assert counts[i] == root_count_modp(ip, p)
        done += 1


def test_chunk_engines_agree(sq):
    s = TargetSystem(((sq, (pt(3), pt(5), pt(7))), (poly_map(-1, 0, 1), (pt(3),))), 3)
    batch = compute_chunk(s, 3, 30000)
    scalar = [r for p in prime_range(3, 30000) if (r := _scalar_record(s, p)) is not None]
    assert batch == scalar


def test_preimage_identity_vs_functional_graph(rng):
    maps = [poly_map(0, 0, 1), poly_map(-1, 0, 1), poly_map(1, 0, 1),
            RationalMap((1, 0, 1), (0, 1, 0), 2), RationalMap.from_polys([1, 0, 0, 1], [0, 2])]
    primes = [p for p in prime_range(5, 2004)]
    for _ in range(150):
        phi = rng.choice(maps)
        alpha = pt(rng.choice([rng.randint(-9, 9), "inf"]))
        m = rng.randint(1, 3)
        try:
            s = TargetSystem(((phi, (alpha,)),), m)
        except PeriodicInput:
            continue
        ip = s.polys[0][0]
        p = rng.choice(primes)
        if ip.is_bad(p):
            continue
        img = image_table(reduce_map(phi, p))
        g = np.arange(p + 1)
        for _ in range(m):
            g = img[g]
        brute = int((g == reduce_point(alpha, p).index).sum())
        count = (root_count_modp(ip, p) if ip.f.degree >= 1 else 0) + ip.infinity_preimage(p)
        assert count == brute


def test_augmentation_containment(rng):
    checked = 0
    while checked < 60:
        phi = RationalMap.polynomial([rng.randint(-4, 4), rng.randint(-4, 4), rng.randint(1, 3)])
        alpha = pt(rng.randint(-10, 10))
        m, r = rng.randint(1, 2), rng.randint(1, 2)
        try:
            s = TargetSystem(((phi, (alpha,)),), m)
            s2 = augment_targets(s, [(0, 0, r)])
        except PeriodicInput:
            continue
        if len(s2.entries[0][1]) < 2:
            continue
        f1 = s.polys[0][0]
        f2 = build_iterate_poly(phi, s2.entries[0][1][1], m + r)
        p = rng.choice(list(prime_range(5, 2000)))
        if f1.is_bad(p) or f2.is_bad(p) or f1.f.degree < 1:
            continue
        for x in range(p):
            if f1.f(x) % p == 0:
                assert f2.f(x) % p == 0
        checked += 1


def test_square_root_implication(sq):
    for m in (1, 2, 3):
        recs = sweep(system(sq, [2, 8], m), 3, 20000).records
        for r in recs:
            (c2, c8), = r.root_counts
            if c2 > 0:
                assert c8 > 0


def test_derangement_excludes_period_dividing_level(sq):
    phi = poly_map(-1, 0, 1)
    for m in (1, 2, 3):
        recs = sweep(TargetSystem(((phi, (pt(3),)),), m), 3, 2004).records
        for r in recs:
            if not r.derangement:
                continue
            shape = orbit_shape(reduce_map(phi, r.p), reduce_point(pt(3), r.p))
            if shape.tail == 0:
                assert m % shape.period != 0


def test_cache_resume_and_torn_line(tmp_path, sq):
    s = system(sq, [3, 5], 2)
    full = sweep(s, 3, 300000, chunk_width=1 << 16)
    cache = tmp_path / "c.jsonl"
    part = sweep(s, 3, 300000, cache_path=cache, max_new_chunks=2)
    assert not part.complete
    with open(cache, "a") as fh:
        fh.write('{"system": "' + s.key + '", "lo": 131072, "hi": 19')  # torn write
    rest = sweep(s, 3, 300000, cache_path=cache)
    assert rest.complete and rest.records == full.records


def test_workers_do_not_change_output(sq):
    s = system(sq, [3, 5, 7], 2)
    a = sweep(s, 3, 200000, workers=1).records
    b = sweep(s, 3, 200000, workers=2).records
    assert a == b
