"""Points of P^1 and rational maps over Q and F_p.

A binary form of degree d is stored as the tuple of its dehomogenized
coefficients: ``c[i]`` multiplies ``X**i * Y**(d - i)``. The formal degree is
carried separately because the affine polynomial may have lower degree when
the form vanishes at infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence, Union

from .errors import BadReduction, CharTooSmall, DegreeCapExceeded, MathDomainError
from .exact import _content, _gcd_p, _mul_z, _trim, form_resultant, format_poly

DEFAULT_DEGREE_CAP = 4096
_EXACT_RESULTANT_MAX_DEGREE = 64


@dataclass(frozen=True)
class ProjPoint:
    """Point (x : y) of P^1(Q) with coprime integer coordinates.

    Canonical sign: y > 0, or (1 : 0) for infinity.
    """

    x: int
    y: int

    def __post_init__(self):
        x, y = self.x, self.y
        if x == 0 and y == 0:
            raise MathDomainError("(0 : 0) is not a point of P^1")
        g = math.gcd(x, y)
        x, y = x // g, y // g
        if y < 0 or (y == 0 and x < 0):
            x, y = -x, -y
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def infinity(cls) -> "ProjPoint":
        return cls(1, 0)

    @classmethod
    def from_value(cls, v) -> "ProjPoint":
        v = Fraction(v)
        return cls(v.numerator, v.denominator)

    @property
    def is_infinity(self) -> bool:
        return self.y == 0

    def value(self) -> Fraction | None:
        return None if self.y == 0 else Fraction(self.x, self.y)

    def __str__(self) -> str:
        if self.y == 0:
            return "inf"
        return str(self.x) if self.y == 1 else f"{self.x}/{self.y}"


@dataclass(frozen=True)
class ProjPointModP:
    """Point of P^1(F_p) in canonical form (x : 1) or (1 : 0)."""

    x: int
    y: int
    p: int

    def __post_init__(self):
        x, y, p = self.x % self.p, self.y % self.p, self.p
        if x == 0 and y == 0:
            raise MathDomainError("(0 : 0) is not a point of P^1")
        if y:
            x, y = x * pow(y, -1, p) % p, 1
        else:
            x = 1
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def is_infinity(self) -> bool:
        return self.y == 0

    @property
    def index(self) -> int:
        """Position in the enumeration 0, 1, ..., p-1, infinity."""
        return self.p if self.y == 0 else self.x

    @classmethod
    def from_index(cls, i: int, p: int) -> "ProjPointModP":
        return cls(1, 0, p) if i == p else cls(i, 1, p)

    def __str__(self) -> str:
        return "inf" if self.y == 0 else str(self.x)


def reduce_point(pt: ProjPoint, p: int) -> ProjPointModP:
    return ProjPointModP(pt.x, pt.y, p)


def _eval_form(c: Sequence[int], x: int, y: int) -> int:
    acc = 0
    ypow = 1
    for i in range(len(c) - 1, -1, -1):
        acc = acc * x + c[i] * ypow
        ypow *= y
    return acc


def _check_coprime(F: Sequence[int], G: Sequence[int], d: int) -> None:
    # degree-d forms share a factor iff Res = 0 iff they share a factor modulo
    # every prime; one prime with a trivial gcd and no degree drop settles it
    for q in (2305843009213693951, 4611686018427387847, 1000000000000000003):
        f = _trim([c % q for c in F])
        g = _trim([c % q for c in G])
        if not f or not g or (len(f) <= d and len(g) <= d):
            continue
        if len(_gcd_p(f, g, q)) == 1:
            return
    if form_resultant(F, G, d) == 0:
        raise MathDomainError("F and G share a common factor")


@dataclass(frozen=True)
class RationalMap:
    """phi = [F : G] with integer forms of degree d >= 2, content 1 and Res(F, G) != 0.

    Canonical sign: the highest-degree nonzero coefficient of G(x, 1) is positive.
    """

    F: tuple
    G: tuple
    d: int

    def __post_init__(self):
        d = self.d
        if d < 2:
            raise MathDomainError(f"maps must have degree >= 2, got {d}")
        F, G = list(self.F), list(self.G)
        if len(F) > d + 1 or len(G) > d + 1 or any(F[d + 1:]) or any(G[d + 1:]):
            raise MathDomainError("form longer than its degree")
        F = (F + [0] * (d + 1))[: d + 1]
        G = (G + [0] * (d + 1))[: d + 1]
        if not any(G) or not any(F):
            raise MathDomainError("F and G share a common factor")
        g = math.gcd(_content(F), _content(G))
        top = next(c for c in reversed(G) if c)
        if top < 0:
            g = -g
        F = tuple(c // g for c in F)
        G = tuple(c // g for c in G)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)
        if d <= _EXACT_RESULTANT_MAX_DEGREE:
            if self.resultant == 0:
                raise MathDomainError("F and G share a common factor")
        else:
            _check_coprime(F, G, d)

    @classmethod
    def from_polys(cls, num: Sequence[int], den: Sequence[int] = (1,)) -> "RationalMap":
        """Map x -> num(x)/den(x); the degree is max(deg num, deg den)."""
        num, den = _trim(list(num)), _trim(list(den))
        d = max(len(num), len(den)) - 1
        return cls(tuple(num), tuple(den), d)

    @classmethod
    def polynomial(cls, coeffs: Sequence[int]) -> "RationalMap":
        return cls.from_polys(coeffs, (1,))

    @cached_property
    def resultant(self) -> int:
        return form_resultant(self.F, self.G, self.d)

    @property
    def is_polynomial(self) -> bool:
        return not any(self.G[1:])

    def __str__(self) -> str:
        return f"{format_poly(self.F)} : {format_poly(self.G)}"


@dataclass(frozen=True)
class ReducedMap:
    """phi_p = [F_p : G_p] over F_p, only built at primes of good reduction."""

    F: tuple
    G: tuple
    d: int
    p: int


def _form_resultant_modp(F: Sequence[int], G: Sequence[int], d: int, p: int) -> bool:
    """True iff the reduced forms still define a degree-d morphism."""
    f = _trim([c % p for c in F])
    g = _trim([c % p for c in G])
    if not f or not g:
        return False
    if len(f) <= d and len(g) <= d:
        return False
    return len(_gcd_p(f, g, p)) == 1


def good_reduction(phi: RationalMap, p: int) -> bool:
    if phi.d <= _EXACT_RESULTANT_MAX_DEGREE:
        return phi.resultant % p != 0
    return _form_resultant_modp(phi.F, phi.G, phi.d, p)


@lru_cache(maxsize=4096)
def reduce_map(phi: RationalMap, p: int) -> ReducedMap:
    if not good_reduction(phi, p):
        raise BadReduction(f"{phi} has bad reduction at p={p}")
    return ReducedMap(tuple(c % p for c in phi.F), tuple(c % p for c in phi.G), phi.d, p)


def _powers(a: list, n: int) -> list:
    out = [[1]]
    for _ in range(n):
        out.append(_mul_z(out[-1], a))
    return out


def _substitute(F: Sequence[int], d: int, a: list, b: list) -> list:
    """Dehomogenized coefficients of F(A, B) where a = A(x,1), b = B(x,1)."""
    pa, pb = _powers(a, d), _powers(b, d)
    acc: list = []
    for i, c in enumerate(F):
        if c:
            term = _mul_z(pa[i], pb[d - i])
            if len(acc) < len(term):
                acc.extend([0] * (len(term) - len(acc)))
            for j, t in enumerate(term):
                acc[j] += c * t
    return _trim(acc)


def compose(f: RationalMap, g: RationalMap, cap: int = DEFAULT_DEGREE_CAP) -> RationalMap:
    """f o g."""
    D = f.d * g.d
    if D > cap:
        raise DegreeCapExceeded(f"composite degree {D} exceeds cap {cap}")
    a, b = _trim(list(g.F)), _trim(list(g.G))
    H1 = _substitute(f.F, f.d, a, b)
    H2 = _substitute(f.G, f.d, a, b)
    return _trusted(H1, H2, D)


def _trusted(F, G, d) -> RationalMap:
    # composites of morphisms are morphisms: skip the coprimality proof
    obj = object.__new__(RationalMap)
    F = (list(F) + [0] * (d + 1))[: d + 1]
    G = (list(G) + [0] * (d + 1))[: d + 1]
    g = math.gcd(_content(F), _content(G))
    if next(c for c in reversed(G) if c) < 0:
        g = -g
    object.__setattr__(obj, "F", tuple(c // g for c in F))
    object.__setattr__(obj, "G", tuple(c // g for c in G))
    object.__setattr__(obj, "d", d)
    return obj



def iterate(phi: RationalMap, m: int, cap: int = DEFAULT_DEGREE_CAP) -> RationalMap:
    """phi^m for m >= 1.

    Built as phi o phi^(m-1): substituting into the small outer map costs
    O(d) big products per step.
    """
    if m < 1:
        raise ValueError("iterate needs m >= 1")
    if phi.d**m > cap:
        raise DegreeCapExceeded(f"degree {phi.d}^{m} exceeds cap {cap}")
    out = phi
    for _ in range(m - 1):
        out = compose(phi, out, cap)
    return out


Point = Union[ProjPoint, ProjPointModP]
AnyMap = Union[RationalMap, ReducedMap]


def apply(phi: AnyMap, pt: Point) -> Point:
    if isinstance(phi, ReducedMap):
        p = phi.p
        if not isinstance(pt, ProjPointModP) or pt.p != p:
            raise ValueError("point and map live over different fields")
        X = _eval_form(phi.F, pt.x, pt.y) % p
        Y = _eval_form(phi.G, pt.x, pt.y) % p
        return ProjPointModP(X, Y, p)
    if not isinstance(pt, ProjPoint):
        raise ValueError("rational maps act on ProjPoint")
    return ProjPoint(_eval_form(phi.F, pt.x, pt.y), _eval_form(phi.G, pt.x, pt.y))


def iterate_point(phi: AnyMap, pt: Point, n: int) -> Point:
    for _ in range(n):
        pt = apply(phi, pt)
    return pt


def _partials(c: Sequence[int], d: int) -> tuple[list, list]:
    dX = [i * c[i] for i in range(1, d + 1)]
    dY = [(d - i) * c[i] for i in range(d)]
    return dX, dY


def wronskian(phi: RationalMap) -> tuple:
    """W = F_X G_Y - F_Y G_X as a degree 2d-2 form (2d-1 coefficients)."""
    d = phi.d
    FX, FY = _partials(phi.F, d)
    GX, GY = _partials(phi.G, d)
    n = 2 * d - 1
    W = [0] * n
    for i in range(d):
        for j in range(d):
            W[i + j] += FX[i] * GY[j] - FY[i] * GX[j]
    return tuple(W)


def critical_points_modp(rmap: ReducedMap) -> frozenset:
    p, d = rmap.p, rmap.d
    if p <= 2 * d:
        raise CharTooSmall(f"critical points mod p need p > 2d = {2 * d}, got p={p}")
    FX, FY = _partials(rmap.F, d)
    GX, GY = _partials(rmap.G, d)
    W = [0] * (2 * d - 1)
    for i in range(d):
        for j in range(d):
            W[i + j] += FX[i] * GY[j] - FY[i] * GX[j]
    W = [c % p for c in W]
    pts = set()
    if W[-1] == 0:
        pts.add(ProjPointModP(1, 0, p))
    if any(W):
        for x in range(p):
            if _eval_form(W, x, 1) % p == 0:
                pts.add(ProjPointModP(x, 1, p))
    return frozenset(pts)
