"""Iterate polynomials, root counts mod p, and prime sweeps for derangement events.

For a map phi = [F : G], a target alpha = (a : b) and a level m, the iterate
polynomial is f = b*F_m(x, 1) - a*G_m(x, 1) with content removed. Its roots
mod p are the affine points z of P^1(F_p) with phi_p^m(z) = alpha mod p;
whether infinity is such a point is tracked separately.

A prime is a derangement prime for a system when no target has any
F_p-rational m-th preimage, affine or at infinity.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import BadPrime, DegreeCapExceeded, EmptySystem, InsufficientData
from .exact import (
    Poly,
    _derivative,
    _gcd_p,
    _trim,
    count_distinct_roots_modp,
    discriminant_z,
    prime_factors,
    primes_array,
)
from .fpbatch import BATCH_PRIME_LIMIT, gcd_degree, inverse, poly_residues, residues, x_pow_p_mod
from .moddyn import QOrbitStatus, require_nonperiodic
from .projmap import (
    DEFAULT_DEGREE_CAP,
    ProjPoint,
    RationalMap,
    apply,
    good_reduction,
    iterate,
)
from .stats import DensityEstimate

CHUNK_WIDTH = 1 << 16
SCHEMA_VERSION = 1
_EXACT_DISC_MAX_DEGREE = 64


# ---------------------------------------------------------------------------
# systems and iterate polynomials
# ---------------------------------------------------------------------------

def _dedupe(points: Sequence[ProjPoint]) -> tuple:
    return tuple(dict.fromkeys(points))


@dataclass(frozen=True)
class TargetSystem:
    """Maps with target lists at a common level m.

    Targets are deduplicated in canonical form; periodic targets are rejected.
    """

    entries: tuple
    level: int
    cap: int = DEFAULT_DEGREE_CAP

    def __post_init__(self):
        entries = tuple((phi, _dedupe(targets)) for phi, targets in self.entries)
        object.__setattr__(self, "entries", entries)
        if self.level < 1:
            raise ValueError("level must be >= 1")
        if not entries or not any(targets for _, targets in entries):
            raise EmptySystem("the system has no targets")
        for phi, targets in entries:
            if phi.d**self.level > self.cap:
                raise DegreeCapExceeded(
                    f"degree {phi.d}^{self.level} exceeds cap {self.cap}")
            for alpha in targets:
                require_nonperiodic(phi, alpha)

    @property
    def max_degree(self) -> int:
        return max(phi.d for phi, _ in self.entries)

    def labels(self) -> list[str]:
        return [f"{i}.{j}" for i, (_, ts) in enumerate(self.entries) for j in range(len(ts))]

    def q_status(self) -> list[QOrbitStatus]:
        return [require_nonperiodic(phi, a) for phi, ts in self.entries for a in ts]

    def describe(self) -> str:
        lines = [f"level {self.level}"]
        for phi, targets in self.entries:
            lines.append(f"map {phi} targets {','.join(map(str, targets))}")
        return "\n".join(lines)

    @cached_property
    def key(self) -> str:
        text = f"schema {SCHEMA_VERSION}\n{self.describe()}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @cached_property
    def polys(self) -> tuple:
        iterates = [iterate(phi, self.level, self.cap) for phi, _ in self.entries]
        return tuple(
            tuple(_iterate_poly(phi, it, alpha, self.level) for alpha in targets)
            for (phi, targets), it in zip(self.entries, iterates))


@dataclass(frozen=True, eq=False)
class IteratePoly:
    map: RationalMap
    alpha: ProjPoint
    m: int
    f: Poly
    inf_value: int

    @property
    def degree(self) -> int:
        return self.f.degree

    @cached_property
    def discriminant(self) -> int:
        return discriminant_z(self.f) if self.f.degree >= 1 else 1

    def bad_modulus(self) -> int | None:
        """disc(f) * Res(F, G) * lead(f), when the discriminant is cheap to get exactly."""
        if self.f.degree > _EXACT_DISC_MAX_DEGREE:
            return None
        return self.discriminant * self.map.resultant * self.f.lead

    @property
    def disc_bad_primes(self) -> frozenset:
        """Primes dividing disc(f)*Res(F,G)*lead(f) (factored by trial division)."""
        n = self.bad_modulus()
        if n is None:
            raise ValueError("discriminant too large to factor; use is_bad(p)")
        return frozenset(prime_factors(n))

    def is_bad(self, p: int) -> bool:
        if p <= self.map.d or not good_reduction(self.map, p):
            return True
        c = [x % p for x in self.f.coeffs]
        if not c or c[-1] == 0:
            return True
        if len(c) == 1:
            return False
        return len(_gcd_p(c, _trim([x % p for x in _derivative(self.f.coeffs)]), p)) > 1

    def infinity_preimage(self, p: int) -> bool:
        return self.inf_value % p == 0


def _iterate_poly(phi: RationalMap, it: RationalMap, alpha: ProjPoint, m: int) -> IteratePoly:
    a, b = alpha.x, alpha.y
    D = it.d
    raw = [b * F - a * G for F, G in zip(it.F, it.G)]
    g = 0
    for c in raw:
        g = math.gcd(g, c)
    lead = next((c for c in reversed(raw) if c), 1)
    if lead < 0:
        g = -g
    f = Poly(tuple(c // g for c in raw))
    return IteratePoly(phi, alpha, m, f, raw[D] // g)


def build_iterate_poly(phi: RationalMap, alpha: ProjPoint, m: int,
                       cap: int = DEFAULT_DEGREE_CAP) -> IteratePoly:
    return _iterate_poly(phi, iterate(phi, m, cap), alpha, m)


def root_count_modp(ip: IteratePoly, p: int) -> int:
    """Distinct roots of f in F_p (affine m-th preimages of alpha)."""
    if ip.is_bad(p):
        raise BadPrime(f"p={p} is a bad prime for {ip.f}")
    if ip.f.degree < 1:
        return 0
    return count_distinct_roots_modp(ip.f, p)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    p: int
    root_counts: tuple
    inf_flags: tuple
    derangement: bool

    @property
    def infinity_hit(self) -> bool:
        return any(any(row) for row in self.inf_flags)

    def flat_counts(self) -> list[int]:
        return [c for row in self.root_counts for c in row]

    def flat_inf(self) -> list[bool]:
        return [f for row in self.inf_flags for f in row]


@dataclass
class SweepResult:
    system: TargetSystem
    lo: int
    hi: int
    records: list
    complete: bool = True

    @property
    def estimate(self) -> DensityEstimate:
        return DensityEstimate(sum(r.derangement for r in self.records), len(self.records))


def chunk_bounds(lo: int, hi: int, width: int = CHUNK_WIDTH) -> list[tuple[int, int]]:
    """Chunks aligned to multiples of width, clipped to [lo, hi)."""
    out = []
    start = lo
    while start < hi:
        end = min((start // width + 1) * width, hi)
        out.append((start, end))
        start = end
    return out


def _scalar_record(system: TargetSystem, p: int) -> SweepRecord | None:
    polys = system.polys
    if any(ip.is_bad(p) for row in polys for ip in row):
        return None
    counts = tuple(tuple(root_count_modp(ip, p) for ip in row) for row in polys)
    infs = tuple(tuple(ip.infinity_preimage(p) for ip in row) for row in polys)
    der = not any(any(r) for r in counts) and not any(any(r) for r in infs)
    return SweepRecord(p, counts, infs, der)


def _batch_counts(ip: IteratePoly, P: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ok, counts, inf) arrays for one iterate polynomial over primes P."""
    coeffs = ip.f.coeffs
    n = len(coeffs) - 1
    inf = residues(ip.inf_value, P) == 0
    if n < 1:
        return np.ones(len(P), dtype=bool), np.zeros(len(P), dtype=np.int64), inf
    fr = poly_residues(coeffs, P)
    lead = fr[:, -1]
    ok = lead != 0
    safe_lead = np.where(ok, lead, 1)
    fm = fr * inverse(safe_lead, P)[:, None] % P[:, None]
    fm[:, -1] = 1
    dr = poly_residues(_derivative(coeffs), P)
    ok &= gcd_degree(fm, dr, P) == 0
    h = x_pow_p_mod(fm, P)
    if n == 1:
        # residue ring is F_p itself: x is the root -fm[0]
        h = (h - (-fm[:, :1] % P[:, None])) % P[:, None]
    else:
        h[:, 1] = (h[:, 1] - 1) % P
    counts = gcd_degree(fm, h, P)
    return ok, counts, inf


def compute_chunk(system: TargetSystem, lo: int, hi: int) -> list[SweepRecord]:
    """All eligible-prime records in [lo, hi), ascending."""
    P = primes_array(max(lo, system.max_degree + 1), hi)
    small = P[P < BATCH_PRIME_LIMIT]
    records: dict[int, SweepRecord] = {}
    if len(small):
        ok = np.ones(len(small), dtype=bool)
        for phi, _ in system.entries:
            ok &= small > phi.d
            ok &= residues(phi.resultant, small) != 0
        small = small[ok]
    if len(small):
        ok = np.ones(len(small), dtype=bool)
        counts, infs = [], []
        for row in system.polys:
            c_row, i_row = [], []
            for ip in row:
                o, c, i = _batch_counts(ip, small)
                ok &= o
                c_row.append(c)
                i_row.append(i)
            counts.append(c_row)
            infs.append(i_row)
        for k in np.flatnonzero(ok).tolist():
            rc = tuple(tuple(int(c[k]) for c in row) for row in counts)
            ri = tuple(tuple(bool(i[k]) for i in row) for row in infs)
            der = not any(any(r) for r in rc) and not any(any(r) for r in ri)
            records[int(small[k])] = SweepRecord(int(small[k]), rc, ri, der)
    for p in P[P >= BATCH_PRIME_LIMIT].tolist():
        rec = _scalar_record(system, p)
        if rec is not None:
            records[p] = rec
    return [records[p] for p in sorted(records)]


def _record_to_json(r: SweepRecord) -> list:
    return [r.p, r.flat_counts(), "".join("1" if f else "0" for f in r.flat_inf()), int(r.derangement)]


def _record_from_json(system: TargetSystem, row: list) -> SweepRecord:
    p, flat, bits, der = row
    shape = [len(ts) for _, ts in system.entries]
    counts, infs, k = [], [], 0
    for n in shape:
        counts.append(tuple(flat[k : k + n]))
        infs.append(tuple(b == "1" for b in bits[k : k + n]))
        k += n
    return SweepRecord(p, tuple(counts), tuple(infs), bool(der))


def load_cache(path: Path, system: TargetSystem) -> dict:
    """Completed chunks for this system; a torn final line is ignored."""
    done = {}
    if not path.exists():
        return done
    with open(path) as fh:
        for line in fh:
            try:
                entry = json.loads(line)
            except json.JSONDecodeError:
                continue
            if entry.get("system") != system.key:
                continue
            recs = [_record_from_json(system, r) for r in entry["records"]]
            done[(entry["lo"], entry["hi"])] = recs
    return done


def _append_cache(path: Path, system: TargetSystem, lo: int, hi: int, recs: list) -> None:
    line = json.dumps({"system": system.key, "lo": lo, "hi": hi,
                       "records": [_record_to_json(r) for r in recs]}, separators=(",", ":"))
    with open(path, "a") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _chunk_job(args):
    system, lo, hi = args
    return compute_chunk(system, lo, hi)


def sweep(system: TargetSystem, lo: int, hi: int, workers: int = 1,
          chunk_width: int = CHUNK_WIDTH, cache_path: str | Path | None = None,
          max_new_chunks: int | None = None) -> SweepResult:
    """Sweep all primes in [lo, hi).

    Chunks found in ``cache_path`` are reused; newly computed ones are
    appended as they finish. ``max_new_chunks`` stops early (the result is
    then marked incomplete) and exists for interruption drills.
    """
    bounds = chunk_bounds(lo, hi, chunk_width)
    cache_path = Path(cache_path) if cache_path is not None else None
    done = load_cache(cache_path, system) if cache_path else {}
    pending = [b for b in bounds if b not in done]
    complete = True
    if max_new_chunks is not None and len(pending) > max_new_chunks:
        pending = pending[:max_new_chunks]
        complete = False
    jobs = [(system, a, b) for a, b in pending]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_chunk_job, jobs)
            for (a, b), recs in zip(pending, results):
                done[(a, b)] = recs
                if cache_path:
                    _append_cache(cache_path, system, a, b, recs)
    else:
        for (a, b) in pending:
            recs = compute_chunk(system, a, b)
            done[(a, b)] = recs
            if cache_path:
                _append_cache(cache_path, system, a, b, recs)
    records = [r for b in bounds if b in done for r in done[b]]
    return SweepResult(system, lo, hi, records, complete)


def iter_sweep(system: TargetSystem, lo: int, hi: int,
               chunk_width: int = CHUNK_WIDTH) -> Iterator[SweepRecord]:
    for a, b in chunk_bounds(lo, hi, chunk_width):
        yield from compute_chunk(system, a, b)


def derangement_density(system: TargetSystem, lo: int, hi: int, **kwargs) -> DensityEstimate:
    return sweep(system, lo, hi, **kwargs).estimate


def augment_targets(system: TargetSystem, additions: Sequence[tuple[int, int, int]]) -> TargetSystem:
    """Append phi_i^r(alpha_ij) to entry i for every (i, j, r)."""
    entries = [(phi, list(ts)) for phi, ts in system.entries]
    for i, j, r in additions:
        if r < 0:
            raise ValueError("r must be >= 0")
        phi, targets = entries[i]
        pt = system.entries[i][1][j]
        for _ in range(r):
            pt = apply(phi, pt)
        targets.append(pt)
    return TargetSystem(tuple((phi, tuple(ts)) for phi, ts in entries), system.level, system.cap)


# ---------------------------------------------------------------------------
# independence diagnostics
# ---------------------------------------------------------------------------

@dataclass
class IndependenceReport:
    labels: list
    eligible: int
    marginals: list
    joint: float
    product_of_marginals: float
    ratio: float | None
    chi_square: float | None
    dof: int

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "eligible": self.eligible,
            "marginal_no_root": dict(zip(self.labels, self.marginals)),
            "joint_no_root": self.joint,
            "product_of_marginals": self.product_of_marginals,
            "ratio": self.ratio,
            "chi_square": self.chi_square,
            "dof": self.dof,
        }


MIN_INDEPENDENCE_PRIMES = 100
_MAX_CHI_TARGETS = 12


def independence_report(system: TargetSystem, lo: int, hi: int, **kwargs) -> IndependenceReport:
    """Joint no-root frequency against the product of marginals.

    Diagnostic only: no accept/reject threshold is applied.
    """
    labels = system.labels()
    if len(labels) < 2:
        raise InsufficientData("independence needs at least two targets")
    recs = sweep(system, lo, hi, **kwargs).records
    n = len(recs)
    if n < MIN_INDEPENDENCE_PRIMES:
        raise InsufficientData(f"only {n} eligible primes; need {MIN_INDEPENDENCE_PRIMES}")
    Z = np.array([[c == 0 and not f for c, f in zip(r.flat_counts(), r.flat_inf())] for r in recs])
    marg = Z.mean(axis=0)
    joint = float(Z.all(axis=1).mean())
    prod_m = float(np.prod(marg))
    ratio = joint / prod_m if prod_m > 0 else None
    chi, dof = None, 2 ** len(labels) - 1 - len(labels)
    if len(labels) <= _MAX_CHI_TARGETS:
        weights = 1 << np.arange(len(labels))
        observed = np.bincount(Z.astype(np.int64) @ weights, minlength=2 ** len(labels))
        chi = 0.0
        for cell in product((0, 1), repeat=len(labels)):
            idx = sum(bit << k for k, bit in enumerate(cell))
            pe = float(np.prod([m if bit else 1 - m for m, bit in zip(marg, cell)]))
            expected = n * pe
            if expected > 0:
                chi += (observed[idx] - expected) ** 2 / expected
    return IndependenceReport(labels, n, [float(m) for m in marg], joint, prod_m, ratio, chi, dof)
