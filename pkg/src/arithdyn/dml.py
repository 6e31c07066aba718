"""Split dynamical Mordell-Lang: orbit incidence scans, progression fits, p-adic certificates.

A split system acts on (P^1)^g coordinatewise. Subvarieties are given by
integer forms that are homogeneous in each pair (X_i : Y_i) separately, so
orbit points passing through infinity are handled like any other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    FitFailure,
    HeightOverflow,
    InvalidCycleData,
    MathDomainError,
    NoCertificateFound,
    PeriodicInput,
)
from .exact import prime_range
from .moddyn import OrbitShape, orbit_indices, orbit_shape, q_orbit_status
from .projmap import (
    DEFAULT_DEGREE_CAP,
    ProjPoint,
    apply,
    critical_points_modp,
    good_reduction,
    iterate,
    iterate_point,
    reduce_map,
    reduce_point,
)

MAX_COORD_DIGITS = 10**6
_MAX_COORD_BITS = math.ceil(MAX_COORD_DIGITS * math.log2(10))


@dataclass(frozen=True)
class SplitSystem:
    maps: tuple
    start: tuple

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "start", tuple(self.start))
        if not self.maps:
            raise MathDomainError("a split system needs g >= 1 coordinates")
        if len(self.maps) != len(self.start):
            raise ValueError("one start point per map is required")

    @property
    def g(self) -> int:
        return len(self.maps)

    def step(self, pts: tuple) -> tuple:
        return tuple(apply(phi, x) for phi, x in zip(self.maps, pts))


@dataclass(frozen=True)
class Subvariety:
    """Common zero set of forms; each form maps exponent tuples
    (e_X1, e_Y1, ..., e_Xg, e_Yg) to integer coefficients."""

    g: int
    equations: tuple

    def __post_init__(self):
        eqs = tuple(tuple(sorted((tuple(e), int(c)) for e, c in dict(eq).items() if c))
                    for eq in self.equations)
        object.__setattr__(self, "equations", eqs)
        for eq in eqs:
            for e, _ in eq:
                if len(e) != 2 * self.g:
                    raise ValueError(f"monomial {e} does not have {2 * self.g} exponents")
            for i in range(self.g):
                degs = {e[2 * i] + e[2 * i + 1] for e, _ in eq}
                if len(degs) > 1:
                    raise ValueError(f"equation is not homogeneous in (X{i + 1} : Y{i + 1})")

    def contains(self, pts: Sequence[ProjPoint]) -> bool:
        coords = [(p.x, p.y) for p in pts]
        for eq in self.equations:
            total = 0
            for e, c in eq:
                term = c
                for i, (x, y) in enumerate(coords):
                    term *= x ** e[2 * i] * y ** e[2 * i + 1]
                total += term
            if total:
                return False
        return True


def orbit_membership_scan(system: SplitSystem, V: Subvariety, N: int) -> list[int]:
    """Sorted n in [0, N] with Phi^n(x) in V, by exact iteration."""
    if V.g != system.g:
        raise ValueError("subvariety and system have different g")
    S = []
    pts = system.start
    for n in range(N + 1):
        if n:
            pts = system.step(pts)
        if any(max(abs(p.x).bit_length(), p.y.bit_length()) > _MAX_COORD_BITS for p in pts):
            raise HeightOverflow(
                f"orbit coordinates exceed {MAX_COORD_DIGITS} digits at n={n}", S, n)
        if V.contains(pts):
            S.append(n)
    return S


# ---------------------------------------------------------------------------
# progression fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProgressionCover:
    """Indicator = exceptional on [0, M), and n mod k in the residues on [M, N]."""

    M: int
    N: int
    exceptional: tuple
    progressions: tuple

    def contains(self, n: int) -> bool:
        if n < self.M:
            return n in self.exceptional
        return any(n % k == l for k, l in self.progressions)

    def indicator(self) -> list[bool]:
        return [self.contains(n) for n in range(self.N + 1)]

    def to_dict(self) -> dict:
        return {"M": self.M, "exceptional": list(self.exceptional),
                "progressions": [list(kl) for kl in self.progressions]}


def fit_progressions(S: Sequence[int], N: int) -> ProgressionCover:
    """Smallest period k <= N/4, then smallest onset M <= N/2, making S k-periodic on [M, N]."""
    members = set(S)
    if any(n < 0 or n > N for n in members):
        raise ValueError("S must lie in [0, N]")
    ind = [n in members for n in range(N + 1)]
    for k in range(1, N // 4 + 1):
        M = 0
        for n in range(N - k, -1, -1):
            if ind[n] != ind[n + k]:
                M = n + 1
                break
        if 2 * M <= N:
            residues = tuple((k, l) for l in range(k) if ind[M + (l - M) % k])
            exceptional = tuple(n for n in sorted(members) if n < M)
            return ProgressionCover(M, N, exceptional, residues)
    raise FitFailure(f"no period k <= {N // 4} with onset M <= {N // 2} fits S on [0, {N}]",
                     sorted(members))


# ---------------------------------------------------------------------------
# p-adic certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PadicCertificate:
    p: int
    mode: str
    shapes: tuple
    critical: tuple
    orbits: tuple = field(repr=False, default=())

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "mode": self.mode,
            "coordinates": [
                {"tail": s.tail, "period": s.period, "critical_points": sorted(map(str, c))}
                for s, c in zip(self.shapes, self.critical)
            ],
        }


def _avoids(rmap, x, mode: str) -> tuple[bool, OrbitShape, frozenset, list]:
    crit = critical_points_modp(rmap)
    pt = reduce_point(x, rmap.p)
    orbit = orbit_indices(rmap, pt)
    shape = orbit_shape(rmap, pt)
    crit_idx = {c.index for c in crit}
    watched = orbit if mode == "strict" else orbit[shape.tail:]
    return not crit_idx.intersection(watched), shape, crit, orbit


def find_padic_certificate(system: SplitSystem, pmax: int, pmin: int = 2,
                           mode: str = "strict") -> PadicCertificate:
    """Smallest eligible prime in [pmin, pmax] whose reduced orbits avoid the critical points.

    strict: the whole orbit mod p avoids every critical point.
    relaxed: only the cycle reached mod p must be free of critical points.
    """
    if mode not in ("strict", "relaxed"):
        raise ValueError("mode must be 'strict' or 'relaxed'")
    for phi, x in zip(system.maps, system.start):
        status = q_orbit_status(phi, x)
        if status.kind != "unverified":
            raise PeriodicInput(
                f"{x} is {status.kind} under {phi}; certificates need "
                "non-preperiodic start coordinates")
    for p in prime_range(pmin, pmax + 1):
        if any(p <= 2 * phi.d or not good_reduction(phi, p) for phi in system.maps):
            continue
        results = [_avoids(reduce_map(phi, p), x, mode)
                   for phi, x in zip(system.maps, system.start)]
        if all(ok for ok, *_ in results):
            return PadicCertificate(
                p, mode,
                tuple(r[1] for r in results),
                tuple(r[2] for r in results),
                tuple(tuple(r[3]) for r in results))
    raise NoCertificateFound(f"no certificate prime in [{pmin}, {pmax}]")


# ---------------------------------------------------------------------------
# reduction to fixed coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizedSystem:
    """Branch r follows the original indices offset + stride*n + r."""

    original: SplitSystem
    offset: int
    stride: int
    branches: tuple

    @property
    def system(self) -> SplitSystem:
        return self.branches[0]

    def translate(self, r: int, n: int) -> int:
        return self.offset + self.stride * n + r

    def original_indices(self, branch_sets: Sequence[Sequence[int]]) -> list[int]:
        return sorted(self.translate(r, n) for r, S in enumerate(branch_sets) for n in S)


def fixed_point_normalize(system: SplitSystem, cycles: Mapping[int, tuple[int, int]],
                          cap: int = DEFAULT_DEGREE_CAP) -> NormalizedSystem:
    """Pass to phi_i^B with starts phi_i^(A + r)(x_i), r in [0, B).

    cycles maps coordinate i to (a, b): phi_i^a(x_i) lies on a cycle of exact
    period b. B is the lcm of the b's and A the largest a, so flagged
    coordinates become fixed points in every branch.
    """
    for i, (a, b) in cycles.items():
        if not 0 <= i < system.g or a < 0 or b < 1:
            raise InvalidCycleData(f"bad cycle data {i}: ({a}, {b})")
        phi = system.maps[i]
        y = iterate_point(phi, system.start[i], a)
        z = y
        for j in range(1, b + 1):
            z = apply(phi, z)
            if (z == y) != (j == b):
                raise InvalidCycleData(
                    f"coordinate {i}: phi^{a}(x) = {y} is not on a cycle of exact period {b}")
    A = max((a for a, _ in cycles.values()), default=0)
    B = math.lcm(*(b for _, b in cycles.values())) if cycles else 1
    maps = tuple(iterate(phi, B, cap) for phi in system.maps)
    branches = []
    starts = [iterate_point(phi, x, A) for phi, x in zip(system.maps, system.start)]
    for _ in range(B):
        branches.append(SplitSystem(maps, tuple(starts)))
        starts = [apply(phi, x) for phi, x in zip(system.maps, starts)]
    return NormalizedSystem(system, A, B, tuple(branches))
