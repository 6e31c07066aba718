"""Dynamics of reduced maps on P^1(F_p).

Points of P^1(F_p) are indexed 0..p-1 for the affine points and p for
infinity; the functional-graph routines work on that index space.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ModulusTooLarge, PeriodicInput
from .exact import prime_range
from .fpbatch import eval_affine, inverse_scalar_mod
from .projmap import (
    ProjPoint,
    ProjPointModP,
    RationalMap,
    ReducedMap,
    apply,
    good_reduction,
    reduce_map,
    reduce_point,
)
from .stats import DensityEstimate

CENSUS_MAX_P = 10**6
Q_ORBIT_STEPS = 64
Q_ORBIT_MAX_BITS = 4096


@dataclass(frozen=True)
class OrbitShape:
    tail: int
    period: int

    @property
    def periodic(self) -> bool:
        return self.tail == 0


def index_step(rmap: ReducedMap) -> Callable[[int], int]:
    """phi_p as a function on point indices."""
    p, F, G = rmap.p, rmap.F, rmap.G
    inf_image = ProjPointModP(F[-1], G[-1], p).index
    rF, rG = F[::-1], G[::-1]

    def step(i: int) -> int:
        if i == p:
            return inf_image
        a = b = 0
        for c in rF:
            a = (a * i + c) % p
        for c in rG:
            b = (b * i + c) % p
        if b == 0:
            return p
        return a * pow(b, -1, p) % p

    return step


def brent(step: Callable[[int], int], x0: int) -> OrbitShape:
    """Brent's cycle detection: (tail, period) with O(1) memory."""
    power = lam = 1
    tortoise, hare = x0, step(x0)
    while tortoise != hare:
        if power == lam:
            tortoise = hare
            power *= 2
            lam = 0
        hare = step(hare)
        lam += 1
    tortoise = hare = x0
    for _ in range(lam):
        hare = step(hare)
    mu = 0
    while tortoise != hare:
        tortoise = step(tortoise)
        hare = step(hare)
        mu += 1
    return OrbitShape(mu, lam)


def orbit_shape(rmap: ReducedMap, pt: ProjPointModP) -> OrbitShape:
    return brent(index_step(rmap), pt.index)


def is_periodic_modp(rmap: ReducedMap, pt: ProjPointModP) -> bool:
    return orbit_shape(rmap, pt).tail == 0


def orbit_indices(rmap: ReducedMap, pt: ProjPointModP) -> list[int]:
    """The tail+period distinct points of the forward orbit, in order."""
    step = index_step(rmap)
    shape = orbit_shape(rmap, pt)
    out = [pt.index]
    for _ in range(shape.tail + shape.period - 1):
        out.append(step(out[-1]))
    return out


# ---------------------------------------------------------------------------
# periodicity over Q
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QOrbitStatus:
    """Outcome of the bounded orbit check over Q.

    ``kind`` is "periodic", "preperiodic" or "unverified" (no repeat found
    before the step or bit-size bound; treated as wandering).
    """

    kind: str
    tail: int | None = None
    period: int | None = None
    steps: int = 0

    @property
    def verified(self) -> bool:
        return self.kind != "unverified"


def q_orbit_status(phi: RationalMap, alpha: ProjPoint, steps: int = Q_ORBIT_STEPS,
                   max_bits: int = Q_ORBIT_MAX_BITS) -> QOrbitStatus:
    seen = {alpha: 0}
    pt = alpha
    for n in range(1, steps + 1):
        pt = apply(phi, pt)
        if pt in seen:
            tail = seen[pt]
            kind = "periodic" if tail == 0 else "preperiodic"
            return QOrbitStatus(kind, tail, n - tail, n)
        if max(abs(pt.x).bit_length(), pt.y.bit_length()) > max_bits:
            return QOrbitStatus("unverified", steps=n)
        seen[pt] = n
    return QOrbitStatus("unverified", steps=steps)


def require_nonperiodic(phi: RationalMap, alpha: ProjPoint) -> QOrbitStatus:
    status = q_orbit_status(phi, alpha)
    if status.kind == "periodic":
        raise PeriodicInput(
            f"{alpha} is periodic of period {status.period} under {phi}; "
            "the hypothesis 'alpha is not periodic' fails")
    return status


# ---------------------------------------------------------------------------
# non-periodicity certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NonPeriodicCertificate:
    map: RationalMap
    alpha: ProjPoint
    primes: tuple = ()
    verified_over_q: bool = True

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"p": p, "tail": s.tail, "period": s.period}) + "\n"
            for p, s in self.primes)


def eligible_prime(phi: RationalMap, p: int) -> bool:
    return p > phi.d and good_reduction(phi, p)


def nonperiodic_prime_scan(phi: RationalMap, alpha: ProjPoint, lo: int, hi: int,
                           primes: Iterable[int] | None = None):
    """Primes in [lo, hi) where alpha mod p is not phi_p-periodic.

    Returns (certificate, density) where density counts hits among eligible
    primes (good reduction and p > deg phi).
    """
    status = require_nonperiodic(phi, alpha)
    hits = []
    eligible = 0
    for p in (prime_range(lo, hi) if primes is None else primes):
        if not eligible_prime(phi, p):
            continue
        eligible += 1
        shape = orbit_shape(reduce_map(phi, p), reduce_point(alpha, p))
        if shape.tail >= 1:
            hits.append((p, shape))
    cert = NonPeriodicCertificate(phi, alpha, tuple(hits), status.verified)
    return cert, DensityEstimate(len(hits), eligible)


# ---------------------------------------------------------------------------
# functional graphs
# ---------------------------------------------------------------------------

def image_table(rmap: ReducedMap) -> np.ndarray:
    """img[i] = index of phi_p(point i) for all p+1 points."""
    p = rmap.p
    if p > CENSUS_MAX_P:
        raise ModulusTooLarge(f"full enumeration needs p <= {CENSUS_MAX_P}, got {p}")
    xs = np.arange(p, dtype=np.int64)
    num = eval_affine(rmap.F, xs, p)
    den = eval_affine(rmap.G, xs, p)
    img = np.full(p + 1, p, dtype=np.int64)
    finite = den != 0
    img[:p][finite] = num[finite] * inverse_scalar_mod(den[finite], p) % p
    img[p] = ProjPointModP(rmap.F[-1], rmap.G[-1], p).index
    return img


def cyclic_mask(img: np.ndarray) -> np.ndarray:
    """Points lying on a cycle: the image of phi^N for N >= number of points."""
    g = img.copy()
    n = 1
    while n < len(img):
        g = g[g]
        n *= 2
    mask = np.zeros(len(img), dtype=bool)
    mask[g] = True
    return mask


@dataclass
class Census:
    p: int
    cycles: dict = field(default_factory=dict)
    cycle_points: int = 0
    tree_points: int = 0
    preimage_counts: np.ndarray | None = None

    @property
    def total(self) -> int:
        return self.cycle_points + self.tree_points


def functional_graph_census(rmap: ReducedMap) -> Census:
    img = image_table(rmap)
    on_cycle = cyclic_mask(img)
    lengths: Counter = Counter()
    seen = np.zeros(len(img), dtype=bool)
    for start in np.flatnonzero(on_cycle).tolist():
        if seen[start]:
            continue
        n, i = 0, start
        while not seen[i]:
            seen[i] = True
            i = int(img[i])
            n += 1
        lengths[n] += 1
    cyc = int(on_cycle.sum())
    return Census(rmap.p, dict(sorted(lengths.items())), cyc, len(img) - cyc,
                  np.bincount(img, minlength=len(img)))
