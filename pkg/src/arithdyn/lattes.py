"""Elliptic curves y^2 = x^3 + a x + b, Lattes maps, and order-divisibility sweeps.

Points over Q use Fraction coordinates; points over F_p use residues. The
Lattes map for [q] comes from division polynomials computed once over
Z[a, b] with sympy and specialized per curve.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import sympy

from .chebsweep import TargetSystem, sweep
from .errors import BadReduction, MathDomainError, PeriodicInput, TorsionInput, UnsupportedQ
from .exact import is_prime, prime_factors, prime_range
from .projmap import ProjPoint, RationalMap, apply
from .stats import DensityEstimate

SUPPORTED_Q = (2, 3, 5, 7)
TORSION_BOUND = 16  # rational torsion has order <= 12, so 16 is a safe bound
_BRUTE_ORDER_LIMIT = 1000

_A, _B, _X, _Y = sympy.symbols("a b x y")


@dataclass(frozen=True)
class EllipticCurve:
    a: int
    b: int

    def __post_init__(self):
        if self.discriminant == 0:
            raise MathDomainError(f"y^2 = x^3 + {self.a}x + {self.b} is singular")

    @property
    def discriminant(self) -> int:
        return -16 * (4 * self.a**3 + 27 * self.b**2)

    def rhs(self, x):
        return x**3 + self.a * x + self.b

    def good_prime(self, p: int) -> bool:
        return p > 3 and self.discriminant % p != 0

    def __str__(self) -> str:
        return f"y^2 = x^3 + {self.a}*x + {self.b}"


@dataclass(frozen=True)
class ECPoint:
    """Affine (x, y) or the identity (x = y = None); p set for points over F_p."""

    x: object = None
    y: object = None
    p: int | None = None

    @classmethod
    def infinity(cls, p: int | None = None) -> "ECPoint":
        return cls(None, None, p)

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __str__(self) -> str:
        return "inf" if self.x is None else f"({self.x}, {self.y})"


def on_curve(E: EllipticCurve, P: ECPoint) -> bool:
    if P.is_infinity:
        return True
    if P.p is None:
        return P.y * P.y == E.rhs(P.x)
    return (P.y * P.y - E.rhs(P.x)) % P.p == 0


def rational_point(E: EllipticCurve, x, y) -> ECPoint:
    P = ECPoint(Fraction(x), Fraction(y))
    if not on_curve(E, P):
        raise MathDomainError(f"({x}, {y}) is not on {E}")
    return P


def ec_neg(P: ECPoint) -> ECPoint:
    if P.is_infinity:
        return P
    return ECPoint(P.x, -P.y if P.p is None else -P.y % P.p, P.p)


def _div(n, d, p):
    return n / d if p is None else n * pow(d, -1, p) % p


def ec_add(E: EllipticCurve, P: ECPoint, Q: ECPoint) -> ECPoint:
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P
    p = P.p
    m = (lambda v: v) if p is None else (lambda v: v % p)
    if m(P.x - Q.x) == 0:
        if m(P.y + Q.y) == 0:
            return ECPoint.infinity(p)
        lam = _div(3 * P.x * P.x + E.a, 2 * P.y, p)
    else:
        lam = _div(P.y - Q.y, P.x - Q.x, p)
    x3 = m(lam * lam - P.x - Q.x)
    y3 = m(lam * (P.x - x3) - P.y)
    return ECPoint(x3, y3, p)


def ec_mul(E: EllipticCurve, n: int, P: ECPoint) -> ECPoint:
    if n < 0:
        return ec_mul(E, -n, ec_neg(P))
    acc = ECPoint.infinity(P.p)
    while n:
        if n & 1:
            acc = ec_add(E, acc, P)
        P = ec_add(E, P, P)
        n >>= 1
    return acc


def reduce_ec_point(E: EllipticCurve, P: ECPoint, p: int) -> ECPoint:
    """Reduction mod p; a point with p in a denominator reduces to the identity."""
    if not E.good_prime(p):
        raise BadReduction(f"{E} has bad reduction at p={p}")
    if P.is_infinity:
        return ECPoint.infinity(p)
    x, y = Fraction(P.x), Fraction(P.y)
    if x.denominator % p == 0:
        return ECPoint.infinity(p)
    return ECPoint(x.numerator * pow(x.denominator, -1, p) % p,
                   y.numerator * pow(y.denominator, -1, p) % p, p)


# ---------------------------------------------------------------------------
# division polynomials and Lattes maps
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _division_polys(n: int) -> tuple:
    """psi_0..psi_n over Z[a, b] as (y-exponent, Poly in x) with y^2 = x^3 + ax + b."""
    dom = sympy.ZZ[_A, _B]
    c = sympy.Poly(_X**3 + _A * _X + _B, _X, domain=dom)

    def P(expr):
        return sympy.Poly(expr, _X, domain=dom)

    def mul(u, v):
        e, f = u[0] + v[0], u[1] * v[1]
        while e >= 2:
            e, f = e - 2, f * c
        return e, f

    def sub(u, v):
        assert u[0] == v[0]
        return u[0], u[1] - v[1]

    psi = [(0, P(0)), (0, P(1)), (1, P(2)),
           (0, P(3 * _X**4 + 6 * _A * _X**2 + 12 * _B * _X - _A**2)),
           (1, P(4 * (_X**6 + 5 * _A * _X**4 + 20 * _B * _X**3 - 5 * _A**2 * _X**2
                      - 4 * _A * _B * _X - 8 * _B**2 - _A**3)))]
    for k in range(5, n + 1):
        m = k // 2
        if k % 2:
            t = sub(mul(psi[m + 2], mul(psi[m], mul(psi[m], psi[m]))),
                    mul(psi[m - 1], mul(psi[m + 1], mul(psi[m + 1], psi[m + 1]))))
        else:
            inner = sub(mul(psi[m + 2], mul(psi[m - 1], psi[m - 1])),
                        mul(psi[m - 2], mul(psi[m + 1], psi[m + 1])))
            e, f = mul(psi[m], inner)
            # divide by 2y: one y comes off the exponent, or out of c when e == 0
            if e == 1:
                t = (0, f.exquo_ground(2))
            else:
                t = (1, f.exquo(c).exquo_ground(2))
        psi.append(t)
    return tuple(psi)


@lru_cache(maxsize=None)
def _generic_lattes(q: int) -> tuple:
    """(num, den) in Z[a, b][x] with x([q]P) = num(x)/den(x)."""
    psi = _division_polys(q + 1)
    dom = sympy.ZZ[_A, _B]
    c = sympy.Poly(_X**3 + _A * _X + _B, _X, domain=dom)

    def y_free(e, f):
        return f * c if e == 2 else f

    e_q, f_q = psi[q]
    den = y_free(2 * e_q, f_q * f_q)
    e_pm = psi[q - 1][0] + psi[q + 1][0]
    cross = y_free(e_pm, psi[q - 1][1] * psi[q + 1][1])
    num = sympy.Poly(_X, _X, domain=dom) * den - cross
    return num, den


def _specialize(poly: sympy.Poly, a: int, b: int) -> list[int]:
    return [int(sympy.Poly(c, _A, _B).eval({_A: a, _B: b})) if c != 0 else 0
            for c in reversed(poly.all_coeffs())]


@dataclass(frozen=True)
class LattesMap:
    curve: EllipticCurve
    q: int
    map: RationalMap


def lattes_map(E: EllipticCurve, q: int) -> LattesMap:
    if q not in SUPPORTED_Q:
        raise UnsupportedQ(f"q={q} not supported; choose one of {SUPPORTED_Q}")
    num, den = _generic_lattes(q)
    phi = RationalMap.from_polys(_specialize(num, E.a, E.b), _specialize(den, E.a, E.b))
    if phi.d != q * q:
        raise MathDomainError(f"Lattes map has degree {phi.d}, expected {q * q}")
    return LattesMap(E, q, phi)


def x_coordinate(P: ECPoint) -> ProjPoint:
    return ProjPoint.infinity() if P.is_infinity else ProjPoint.from_value(P.x)


# ---------------------------------------------------------------------------
# semiconjugacy checks
# ---------------------------------------------------------------------------

def find_rational_points(E: EllipticCurve, xbound: int = 200, dbound: int = 4,
                         limit: int = 8) -> list[ECPoint]:
    """Affine points with x = u/w^2, |u| <= xbound, 1 <= w <= dbound."""
    out = []
    for w in range(1, dbound + 1):
        for u in range(-xbound, xbound + 1):
            if math.gcd(u, w) != 1:
                continue
            # y^2 w^6 = u^3 + a u w^4 + b w^6
            r = u**3 + E.a * u * w**4 + E.b * w**6
            if r < 0:
                continue
            s = math.isqrt(r)
            if s * s == r:
                out.append(ECPoint(Fraction(u, w * w), Fraction(s, w**3)))
                if len(out) >= limit:
                    return out
    return out


def symbolic_identity(q: int, a=None, b=None) -> bool:
    """x([q]P) = phi(x(P)) as rational functions, via the chord-tangent law with y^2 = c(x).

    a, b default to the generic coefficients.
    """
    a = _A if a is None else a
    b = _B if b is None else b
    c = _X**3 + a * _X + b
    num, den = _generic_lattes(q)
    num, den = num.as_expr().subs({_A: a, _B: b}), den.as_expr().subs({_A: a, _B: b})

    def reduce_y(expr):
        n, d = sympy.fraction(sympy.cancel(sympy.together(expr)))
        n = sympy.rem(sympy.expand(n), _Y**2 - c, _Y)
        d = sympy.rem(sympy.expand(d), _Y**2 - c, _Y)
        return n, d

    def add(P, Q):
        (x1, y1), (x2, y2) = P, Q
        lam = (3 * x1**2 + a) / (2 * y1) if P is Q else (y2 - y1) / (x2 - x1)
        x3 = lam**2 - x1 - x2
        y3 = lam * (x1 - x3) - y1
        return sympy.cancel(x3), sympy.cancel(y3)

    base = (_X, _Y)
    acc = add(base, base)
    for _ in range(q - 2):
        acc = add(acc, base)
    n1, d1 = reduce_y(acc[0])
    diff = sympy.rem(sympy.expand(n1 * den - d1 * num), _Y**2 - c, _Y)
    return sympy.expand(diff) == 0


@dataclass
class SemiconjugacyResult:
    ok: bool
    checked: int
    witnesses: list = field(default_factory=list)
    symbolic: bool | None = None


def _sqrt_mod(r: int, p: int) -> int | None:
    roots = sympy.ntheory.residue_ntheory.sqrt_mod(r, p, all_roots=False)
    return None if roots is None else int(roots)


def verify_semiconjugacy(lm: LattesMap, trials: int = 20, seed: int = 0,
                         symbolic: bool = False) -> SemiconjugacyResult:
    """Check x([q]P) = phi(x(P)) on sample points; F_p points when Q-points are scarce."""
    E, q, phi = lm.curve, lm.q, lm.map
    rng = random.Random(seed)
    res = SemiconjugacyResult(True, 0)
    gens = find_rational_points(E)
    for t in range(trials if gens else 0):
        P = ec_mul(E, rng.randint(1, 4), rng.choice(gens))
        if len(gens) > 1 and t % 2:
            P = ec_add(E, P, rng.choice(gens))
        lhs = x_coordinate(ec_mul(E, q, P))
        rhs = apply(phi, x_coordinate(P))
        res.checked += 1
        if lhs != rhs:
            res.ok = False
            res.witnesses.append({"P": str(P), "x([q]P)": str(lhs), "phi(x(P))": str(rhs)})
    if not gens:
        primes = [p for p in prime_range(q * q + 3, 2000) if E.good_prime(p)]
        for _ in range(trials):
            p = rng.choice(primes)
            while True:
                x = rng.randrange(p)
                y = _sqrt_mod(E.rhs(x) % p, p)
                if y is not None:
                    break
            P = ECPoint(x, y, p)
            R = ec_mul(E, q, P)
            lhs = ProjPoint.infinity() if R.is_infinity else ProjPoint(R.x, 1)
            rhs = apply(phi, ProjPoint(x, 1))
            res.checked += 1
            ok = (rhs.is_infinity and lhs.is_infinity) if rhs.y % p == 0 else (
                not lhs.is_infinity and (rhs.x - lhs.x * rhs.y) % p == 0)
            if not ok:
                res.ok = False
                res.witnesses.append({"p": p, "P": str(P), "x([q]P)": str(lhs),
                                      "phi(x(P))": str(rhs)})
    if symbolic:
        res.symbolic = symbolic_identity(q, E.a, E.b)
        res.ok = res.ok and res.symbolic
    return res


# ---------------------------------------------------------------------------
# orders mod p
# ---------------------------------------------------------------------------

def _order_from_multiple(E: EllipticCurve, P: ECPoint, N: int) -> int:
    for r in prime_factors(N):
        while N % r == 0 and ec_mul(E, N // r, P).is_infinity:
            N //= r
    return N


def point_order_modp(E: EllipticCurve, Q: ECPoint, p: int) -> int:
    """Exact order of Q mod p in E(F_p)."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    P = reduce_ec_point(E, Q, p)
    if P.is_infinity:
        return 1
    if p < _BRUTE_ORDER_LIMIT:
        R, n = P, 1
        while not R.is_infinity:
            R = ec_add(E, R, P)
            n += 1
        return n
    # baby-step giant-step for some N in the Hasse window with [N]P = O;
    # babies are keyed by x so a match means [lo + i*m] P = +-[j] P
    lo = max(1, p + 1 - 2 * math.isqrt(p) - 2)
    m = math.isqrt(4 * math.isqrt(p) + 5) + 1
    baby = {}
    R = P
    for j in range(1, m + 1):
        baby.setdefault(R.x, j)
        R = ec_add(E, R, P)
    giant = ec_mul(E, m, P)
    G = ec_mul(E, lo, P)
    for i in range(m + 2):
        base = lo + i * m
        if G.is_infinity:
            return _order_from_multiple(E, P, base)
        j = baby.get(G.x)
        if j is not None:
            for N in (base - j, base + j):
                if N > 0 and ec_mul(E, N, P).is_infinity:
                    return _order_from_multiple(E, P, N)
        G = ec_add(E, G, giant)
    raise MathDomainError(f"no group-order multiple found for {Q} mod {p}")


def torsion_order(E: EllipticCurve, Q: ECPoint, bound: int = TORSION_BOUND) -> int | None:
    R = Q
    for m in range(1, bound + 1):
        if R.is_infinity:
            return m
        R = ec_add(E, R, Q)
    return None


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class DivisibilityReport:
    curve: EllipticCurve
    point: ECPoint
    q: int
    n: int
    estimate: DensityEstimate
    torsion_order: int | None
    derangement_primes: int = 0
    violations: list = field(default_factory=list)
    level_gaps: int = 0
    crosscheck_note: str | None = None
    orders: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "curve": [self.curve.a, self.curve.b],
            "point": str(self.point),
            "q": self.q,
            "n": self.n,
            "torsion_order": self.torsion_order,
            "linear_disjointness": "unverified",
            **self.estimate.to_dict(),
            "crosscheck_derangement_primes": self.derangement_primes,
            "crosscheck_violations": self.violations,
            "crosscheck_level_gaps": self.level_gaps,
            "crosscheck_note": self.crosscheck_note,
        }


def order_divisibility_sweep(E: EllipticCurve, Q: ECPoint, q: int, n: int, lo: int, hi: int,
                             allow_torsion: bool = False, crosscheck: bool = True,
                             workers: int = 1) -> DivisibilityReport:
    """Share of good primes in [lo, hi) with q^n | order(Q mod p).

    The cross-check sweeps the Lattes system (phi, {x(Q)}) at level n. A
    derangement prime there has Q outside [q^n] E(F_p), which forces q to
    divide the order of Q mod p; primes where it does not are violations.
    For n >= 2 the stronger q^n | order can fail at derangement primes; those
    are counted in level_gaps, not treated as violations.
    """
    if not on_curve(E, Q):
        raise MathDomainError(f"{Q} is not on {E}")
    tors = torsion_order(E, Q)
    if tors is not None and not allow_torsion:
        raise TorsionInput(f"{Q} is torsion of order {tors} on {E}; a non-torsion point is required")
    qn = q**n
    hits = eligible = 0
    orders = {}
    for p in prime_range(lo, hi):
        if not E.good_prime(p):
            continue
        N = point_order_modp(E, Q, p)
        orders[p] = N
        eligible += 1
        hits += N % qn == 0
    report = DivisibilityReport(E, Q, q, n, DensityEstimate(hits, eligible), tors, orders=orders)
    if crosscheck and n >= 1 and not Q.is_infinity:
        lm = lattes_map(E, q)
        try:
            system = TargetSystem(((lm.map, (x_coordinate(Q),)),), n)
        except PeriodicInput as exc:
            report.crosscheck_note = str(exc)
            return report
        for rec in sweep(system, lo, hi, workers=workers).records:
            if rec.derangement and rec.p in orders:
                report.derangement_primes += 1
                if orders[rec.p] % q:
                    report.violations.append(rec.p)
                elif orders[rec.p] % qn:
                    report.level_gaps += 1
    return report
