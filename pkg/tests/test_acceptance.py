"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line."""

import json
import random
import time

import numpy as np
import pytest

from arithdyn.chebsweep import (
    TargetSystem,
    build_iterate_poly,
    derangement_density,
    independence_report,
    root_count_modp,
    sweep,
)
from arithdyn.cli import main
from arithdyn.dml import SplitSystem, Subvariety, find_padic_certificate, fit_progressions, orbit_membership_scan
from arithdyn.exact import prime_range
from arithdyn.lattes import (
    EllipticCurve,
    ec_mul,
    lattes_map,
    order_divisibility_sweep,
    rational_point,
    symbolic_identity,
    verify_semiconjugacy,
    x_coordinate,
)
from arithdyn.moddyn import orbit_shape
from arithdyn.projmap import ProjPointModP, RationalMap, apply, good_reduction, reduce_map

from conftest import poly_map, pt

SQ = poly_map(0, 0, 1)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def system(phi, targets, m):
    return TargetSystem(((phi, tuple(pt(t) for t in targets)),), m)


def scan_roots(coeffs, p):
    xs = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in reversed(coeffs):
        acc = (acc * xs + c % p) % p
    return int(np.count_nonzero(acc == 0))


def random_map(rng):
    while True:
        d = rng.choice([2, 2, 3])
        F = [rng.randint(-5, 5) for _ in range(d + 1)]
        if rng.random() < 0.5:
            G = [0] * d + [0]
            G[0] = rng.randint(1, 3)
            F[d] = F[d] or 1
        else:
            G = [rng.randint(-5, 5) for _ in range(d + 1)]
        try:
            return RationalMap(tuple(F), tuple(G), d)
        except Exception:
            continue


def test_criterion_1_root_count_oracle(report):
    rng = random.Random(1)
    primes = list(prime_range(3, 10001))
    t0 = time.time()
    pairs = mismatches = 0
    while pairs < 10000:
        phi = random_map(rng)
        m = rng.randint(1, 3 if phi.d == 2 else 2)
        alpha = pt(f"{rng.randint(-50, 50)}/{rng.randint(1, 4)}")
        ip = build_iterate_poly(phi, alpha, m)
        if ip.f.degree < 1:
            continue
        for p in rng.sample(primes, 20):
            if ip.is_bad(p):
                continue
            pairs += 1
            mismatches += root_count_modp(ip, p) != scan_roots(ip.f.coeffs, p)
    dt = time.time() - t0
    report(1, mismatches == 0 and dt < 60,
           f"{pairs} pairs, {mismatches} mismatches, {dt:.1f} s (limit 60 s)")


def test_criterion_2_quadratic_anchor(report):
    t0 = time.time()
    small = derangement_density(system(SQ, [3], 1), 4, 100)
    big = derangement_density(system(SQ, [3], 1), 4, 10**6)
    dt = time.time() - t0
    ok = str(small.proportion) == "12/23" and abs(float(big.proportion) - 0.5) < 0.01 and dt < 120
    report(2, ok, f"(3,100): {small.proportion}; <1e6: {float(big.proportion):.5f} "
                  f"(|diff| {abs(float(big.proportion) - 0.5):.5f} < 0.01), {dt:.1f} s")


def cli_sweep(out, *extra):
    code = main(["sweep", "--map", "x^2", "--targets", "3,5,7", "--level", "3",
                 "--primes", "3..1000000", "--out-dir", str(out), *map(str, extra)])
    return code


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("full")
    t0 = time.time()
    assert cli_sweep(out) == 0
    return out, time.time() - t0


def test_criterion_3_positive_density(report, full_run):
    out, dt = full_run
    s = system(SQ, [3, 5, 7], 3)
    t0 = time.time()
    recs = sweep(s, 3, 10**6, cache_path=out / ".cache" / f"{s.key}.jsonl").records
    dt += time.time() - t0
    summary = json.loads((out / "summary.json").read_text())
    lo99 = summary["wilson99_lo"]
    low = [r.derangement for r in recs if r.p < 10**5]
    high = [r.derangement for r in recs if r.p > 10**5]
    diff = abs(np.mean(low) - np.mean(high))
    report(3, lo99 > 0 and diff < 0.05 and dt < 600,
           f"proportion {summary['proportion']:.4f}, Wilson99 lower {lo99:.4f} > 0; "
           f"(3,1e5) {np.mean(low):.4f} vs (1e5,1e6) {np.mean(high):.4f}, diff {diff:.4f} < 0.05; "
           f"{dt:.1f} s")


def test_criterion_4_augmentation(report):
    rng = random.Random(4)
    primes = list(prime_range(3, 10001))
    tuples = violations = 0
    while tuples < 100:
        phi = random_map(rng)
        alpha = pt(rng.randint(-20, 20))
        m, r = rng.randint(1, 3), rng.randint(1, 3)
        if phi.d ** (m + r) > 729:
            continue
        beta = alpha
        for _ in range(r):
            beta = apply(phi, beta)
        if beta.is_infinity:
            continue
        f1 = build_iterate_poly(phi, alpha, m)
        f2 = build_iterate_poly(phi, beta, m + r)
        p = rng.choice(primes)
        if not good_reduction(phi, p) or p <= phi.d or f1.f.degree < 1:
            continue
        xs = np.arange(p, dtype=np.int64)

        def values(c):
            acc = np.zeros(p, dtype=np.int64)
            for a in reversed(c):
                acc = (acc * xs + a % p) % p
            return acc

        v1, v2 = values(f1.f.coeffs), values(f2.f.coeffs)
        violations += int(np.count_nonzero((v1 == 0) & (v2 != 0)))
        tuples += 1
    report(4, violations == 0, f"{tuples} tuples, {violations} violations")


def test_criterion_5_dependence(report):
    violations = 0
    ratios = []
    for m in (1, 2, 3):
        s = system(SQ, [2, 8], m)
        for r in sweep(s, 3, 10**5).records:
            (c2, c8), = r.root_counts
            violations += c2 > 0 and c8 == 0
        ratios.append(independence_report(s, 3, 10**5).ratio)
    ok = violations == 0 and all(abs(x - 1) > 0.1 for x in ratios)
    report(5, ok, f"{violations} implication violations; ratios "
                  + ", ".join(f"m={m}: {x:.3f}" for m, x in zip((1, 2, 3), ratios)))


def naive_shape(rmap, start):
    seen = {}
    z = start
    while z.index not in seen:
        seen[z.index] = len(seen)
        z = apply(rmap, z)
    mu = seen[z.index]
    return mu, len(seen) - mu


def test_criterion_6_orbit_shape_oracle(report):
    maps = {"x^2": SQ, "x^2-1": poly_map(-1, 0, 1), "x^2+1": poly_map(1, 0, 1),
            "[X^2+Y^2:XY]": RationalMap((1, 0, 1), (0, 1, 0), 2)}
    points = mismatches = 0
    skipped = []
    for name, phi in maps.items():
        for p in prime_range(2, 102):
            if not good_reduction(phi, p):
                skipped.append((name, p))
                continue
            rmap = reduce_map(phi, p)
            for i in range(p + 1):
                z = ProjPointModP.from_index(i, p)
                s = orbit_shape(rmap, z)
                points += 1
                mismatches += (s.tail, s.period) != naive_shape(rmap, z)
    report(6, mismatches == 0, f"{points} points, {mismatches} mismatches; "
                               f"bad-reduction pairs skipped: {skipped}")


def test_criterion_7_lattes(report):
    rng = random.Random(7)
    checked = failures = 0
    curves = 0
    while curves < 10:
        a, b = rng.randint(-9, 9), rng.randint(-9, 9)
        if 4 * a**3 + 27 * b**2 == 0:
            continue
        res = verify_semiconjugacy(lattes_map(EllipticCurve(a, b), 2), trials=10,
                                   seed=rng.randrange(10**6))
        checked += res.checked
        failures += len(res.witnesses)
        curves += 1
    generic = symbolic_identity(2)
    E = EllipticCurve(0, 1)
    P = rational_point(E, 2, 3)
    phi = lattes_map(E, 2).map
    anchor = apply(phi, pt(2)) == pt(0) and x_coordinate(ec_mul(E, 2, P)) == pt(0) \
        and ec_mul(E, 2, P).y == 1
    ok = checked == 100 and failures == 0 and generic and anchor
    report(7, ok, f"{checked} points on {curves} curves, {failures} failures; "
                  f"generic q=2 identity {generic}; anchor phi(2)=0=[2]P.x {anchor}")


def test_criterion_8_lattes_divisibility(report):
    E = EllipticCurve(0, 1)
    Q = rational_point(E, 2, 3)
    rep = order_divisibility_sweep(E, Q, 2, 1, 4, 10**4, allow_torsion=True)
    lo99 = rep.estimate.wilson99[0]
    ok = lo99 > 0 and not rep.violations and rep.derangement_primes > 0
    report(8, ok, f"proportion {float(rep.estimate.proportion):.4f}, Wilson99 lower {lo99:.4f}; "
                  f"{rep.derangement_primes} derangement primes, {len(rep.violations)} violations")


def test_criterion_9_dml_round_trip(report):
    t0 = time.time()
    N = 60
    diag = Subvariety(2, [{(1, 0, 0, 1): 1, (0, 1, 1, 0): -1}])
    four = Subvariety(1, [{(1, 0): 1, (0, 1): -4}])
    S1 = orbit_membership_scan(SplitSystem((SQ, SQ), (pt(2), pt(2))), diag, 12)
    S2 = orbit_membership_scan(SplitSystem((SQ,), (pt(2),)), four, 15)
    S3 = orbit_membership_scan(SplitSystem((SQ, SQ), (pt(2), pt(4))), diag, 15)
    c1 = fit_progressions(list(range(N + 1)), N)
    c2 = fit_progressions([1], N)
    c3 = fit_progressions([], N)
    cert = find_padic_certificate(SplitSystem((SQ,), (pt(3),)), 100, pmin=6)
    dt = time.time() - t0
    ok = (S1 == list(range(13)) and S2 == [1] and S3 == []
          and (c1.M, c1.exceptional, c1.progressions) == (0, (), ((1, 0),))
          and (c2.M, c2.exceptional, c2.progressions) == (2, (1,), ())
          and (c3.M, c3.exceptional, c3.progressions) == (0, (), ())
          and cert.p == 7 and dt < 10)
    report(9, ok, f"S = [0,12], {S2}, {S3}; covers M={c1.M}/{c2.M}/{c3.M}; "
                  f"certificate p={cert.p}; {dt:.2f} s")


def test_criterion_10_resume(report, full_run, tmp_path):
    full, _ = full_run
    part = tmp_path / "part"
    assert cli_sweep(part, "--max-chunks", 8) == 0
    halfway = json.loads((part / "summary.json").read_text())["complete"]
    assert cli_sweep(part) == 0
    same = all((full / f).read_bytes() == (part / f).read_bytes()
               for f in ("sweep.csv", "summary.json"))
    report(10, same and halfway is False,
           f"interrupted after 8 of 16 chunks (complete={halfway}); "
           f"resumed sweep.csv and summary.json byte-identical: {same}")
