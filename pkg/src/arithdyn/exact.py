"""Exact integer arithmetic, prime generation and dense polynomials over Z and F_p.

Integers and rationals are Python's ``int`` and :class:`fractions.Fraction`.
Polynomials are immutable :class:`Poly` values holding an ascending tuple of
coefficients; ``p=None`` means coefficients in Z, otherwise in F_p.

The list-level helpers (``_mul_z``, ``_divmod_p`` ...) work on plain lists and
are what the hot paths call directly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DegreeCapExceeded, MathDomainError

MAX_POLY_DEGREE = 1 << 16
MAX_MODULUS = 1 << 62

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MR_DETERMINISTIC_LIMIT = 1 << 64
_MR_RANDOM_ROUNDS = 64
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97)

_KRONECKER_THRESHOLD = 24
_SEGMENT = 1 << 20


def gcd_int(a: int, b: int) -> int:
    return math.gcd(a, b)


# ---------------------------------------------------------------------------
# primes
# ---------------------------------------------------------------------------

def _mr_round(n: int, d: int, r: int, a: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime(n: int) -> bool:
    """Miller-Rabin; deterministic below 2**64, error < 2**-128 above."""
    if n < 0:
        raise ValueError("is_prime expects n >= 0")
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n == q:
            return True
        if n % q == 0:
            return False
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    if n < _MR_DETERMINISTIC_LIMIT:
        bases = _MR_BASES
    else:
        rng = random.SystemRandom()
        bases = [rng.randrange(2, n - 1) for _ in range(_MR_RANDOM_ROUNDS)]
    return all(_mr_round(n, d, r, a) for a in bases)


def _small_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for i in range(2, math.isqrt(limit) + 1):
        if flags[i]:
            flags[i * i :: i] = False
    return np.flatnonzero(flags).astype(np.int64)


def primes_array(lo: int, hi: int) -> np.ndarray:
    """All primes in [lo, hi) as an ascending int64 array (segmented sieve)."""
    lo = max(lo, 2)
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    if hi > MAX_MODULUS:
        raise ValueError("prime sieving is limited to hi <= 2**62")
    root = math.isqrt(hi - 1)
    if (hi - lo) * 64 < root:
        # narrow window far out: sieving base primes would dominate
        return np.array([n for n in range(lo, hi) if is_prime(n)], dtype=np.int64)
    base = _small_sieve(root)
    out = []
    for seg_lo in range(lo, hi, _SEGMENT):
        seg_hi = min(seg_lo + _SEGMENT, hi)
        flags = np.ones(seg_hi - seg_lo, dtype=bool)
        for q in base:
            q = int(q)
            if q * q >= seg_hi:
                break
            start = max(q * q, -(-seg_lo // q) * q)
            flags[start - seg_lo :: q] = False
        out.append(np.flatnonzero(flags).astype(np.int64) + seg_lo)
    return np.concatenate(out)


def prime_range(lo: int, hi: int) -> Iterator[int]:
    """Yield the primes in [lo, hi) in ascending order."""
    if lo > hi:
        raise ValueError("prime_range requires lo <= hi")
    for seg_lo in range(max(lo, 2), hi, _SEGMENT):
        yield from primes_array(seg_lo, min(seg_lo + _SEGMENT, hi)).tolist()


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n != 0 by trial division (small n only)."""
    n = abs(n)
    out = []
    q = 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1 if q == 2 else 2
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# list-level polynomial helpers (ascending coefficient lists)
# ---------------------------------------------------------------------------

def _trim(a: list) -> list:
    while a and not a[-1]:
        a.pop()
    return a


def _add(a: Sequence[int], b: Sequence[int]) -> list:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def _sub(a: Sequence[int], b: Sequence[int]) -> list:
    out = list(a) + [0] * max(0, len(b) - len(a))
    for i, c in enumerate(b):
        out[i] -= c
    return _trim(out)


def _scale(a: Sequence[int], c: int) -> list:
    return _trim([x * c for x in a])


def _pack(coeffs: Sequence[int], width: int) -> int:
    pos = b"".join((c if c > 0 else 0).to_bytes(width, "little") for c in coeffs)
    neg = b"".join((-c if c < 0 else 0).to_bytes(width, "little") for c in coeffs)
    return int.from_bytes(pos, "little") - int.from_bytes(neg, "little")


def _kronecker(a: Sequence[int], b: Sequence[int]) -> list:
    n = len(a) + len(b) - 1
    bound = max(abs(c) for c in a) * max(abs(c) for c in b) * min(len(a), len(b))
    width = (bound.bit_length() + 9) // 8 + 1
    prod = _pack(a, width) * _pack(b, width)
    half = 1 << (8 * width - 1)
    offset = int.from_bytes(half.to_bytes(width, "little") * n, "little")
    raw = (prod + offset).to_bytes(width * n, "little")
    return [int.from_bytes(raw[i * width : (i + 1) * width], "little") - half for i in range(n)]


def _mul_z(a: Sequence[int], b: Sequence[int]) -> list:
    if not a or not b:
        return []
    if min(len(a), len(b)) > _KRONECKER_THRESHOLD:
        return _trim(_kronecker(a, b))
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _mul_p(a: Sequence[int], b: Sequence[int], p: int) -> list:
    return _trim([c % p for c in _mul_z(a, b)])


def _divmod_p(a: Sequence[int], b: Sequence[int], p: int) -> tuple[list, list]:
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(a)
    db = len(b) - 1
    if len(r) - 1 < db:
        return [], _trim(r)
    inv = pow(b[-1], -1, p)
    q = [0] * (len(r) - db)
    for i in range(len(r) - 1, db - 1, -1):
        c = r[i] * inv % p
        if c:
            q[i - db] = c
            for j in range(db):
                r[i - db + j] = (r[i - db + j] - c * b[j]) % p
        r[i] = 0
    return _trim(q), _trim(r[:db])


def _mod_p(a: Sequence[int], b: Sequence[int], p: int) -> list:
    return _divmod_p(a, b, p)[1]


def _monic_p(a: Sequence[int], p: int) -> list:
    if not a:
        return []
    inv = pow(a[-1], -1, p)
    return [c * inv % p for c in a]


def _gcd_p(a: Sequence[int], b: Sequence[int], p: int) -> list:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _mod_p(a, b, p)
    return _monic_p(a, p)


def _powmod_p(base: Sequence[int], e: int, f: Sequence[int], p: int) -> list:
    result = [1] if len(f) > 1 else []
    base = _mod_p(base, f, p)
    for bit in bin(e)[2:]:
        result = _mod_p(_mul_p(result, result, p), f, p)
        if bit == "1":
            result = _mod_p(_mul_p(result, base, p), f, p)
    return result


def _x_pow_mod_p(e: int, f: Sequence[int], p: int) -> list:
    """x**e mod f over F_p by left-to-right squaring; multiplying by x is a shift."""
    f = _monic_p(f, p)
    n = len(f) - 1
    result = [1]
    for bit in bin(e)[2:]:
        result = _mod_p(_mul_p(result, result, p), f, p)
        if bit == "1":
            result = [0] + result
            if len(result) > n:
                c = result[n]
                result = _trim([(result[j] - c * f[j]) % p for j in range(n)])
    return _trim(result)


def _derivative(a: Sequence[int]) -> list:
    return _trim([i * a[i] for i in range(1, len(a))])


def _content(a: Sequence[int]) -> int:
    g = 0
    for c in a:
        g = math.gcd(g, c)
        if g == 1:
            break
    return g


def _prem_z(a: Sequence[int], b: Sequence[int]) -> list:
    """Pseudo-remainder lead(b)**(deg a - deg b + 1) * a mod b over Z."""
    r = list(a)
    db = len(b) - 1
    lb = b[-1]
    e = len(r) - 1 - db + 1
    while r and len(r) - 1 >= db:
        c = r[-1]
        shift = len(r) - 1 - db
        r = [x * lb for x in r]
        for j in range(db + 1):
            r[shift + j] -= c * b[j]
        _trim(r)
        e -= 1
    if e > 0:
        r = [x * lb**e for x in r]
    return _trim(r)


def _resultant_z(a: Sequence[int], b: Sequence[int]) -> int:
    """Resultant over Z by the subresultant PRS (Cohen, Alg. 3.3.7)."""
    a, b = _trim(list(a)), _trim(list(b))
    if not a or not b:
        raise MathDomainError("resultant of the zero polynomial")
    s = 1
    if len(a) < len(b):
        if (len(a) - 1) % 2 == 1 and (len(b) - 1) % 2 == 1:
            s = -1
        a, b = b, a
    if len(b) == 1:
        return s * b[0] ** (len(a) - 1)
    ca, cb = _content(a), _content(b)
    a = [x // ca for x in a]
    b = [x // cb for x in b]
    t = ca ** (len(b) - 1) * cb ** (len(a) - 1)
    g = h = 1
    while True:
        da, db = len(a) - 1, len(b) - 1
        delta = da - db
        if da % 2 == 1 and db % 2 == 1:
            s = -s
        r = _prem_z(a, b)
        if not r:
            return 0
        a = b
        div = g * h**delta
        b = [x // div for x in r]
        g = a[-1]
        h = g**delta // h ** (delta - 1) if delta >= 1 else h
        if len(b) == 1:
            da = len(a) - 1
            # h <- h^(1 - deg a) * lead(b)^deg a, exact
            return s * t * (b[0] ** da // h ** (da - 1))


# ---------------------------------------------------------------------------
# Poly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Poly:
    """Dense univariate polynomial, ascending coefficients, over Z (p=None) or F_p."""

    coeffs: tuple
    p: int | None = None

    def __post_init__(self):
        c = list(self.coeffs)
        if self.p is not None:
            if not 2 <= self.p <= MAX_MODULUS:
                raise ValueError(f"modulus {self.p} outside [2, 2**62]")
            c = [x % self.p for x in c]
        _trim(c)
        if len(c) - 1 > MAX_POLY_DEGREE:
            raise DegreeCapExceeded(f"degree {len(c) - 1} exceeds {MAX_POLY_DEGREE}")
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def x(cls, p: int | None = None) -> "Poly":
        return cls((0, 1), p)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def _check(self, other: "Poly") -> None:
        if self.p != other.p:
            raise ValueError("polynomials over different coefficient rings")

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        return Poly(tuple(_add(self.coeffs, other.coeffs)), self.p)

    def __sub__(self, other: "Poly") -> "Poly":
        self._check(other)
        return Poly(tuple(_sub(self.coeffs, other.coeffs)), self.p)

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs), self.p)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, int):
            return Poly(tuple(_scale(self.coeffs, other)), self.p)
        self._check(other)
        if self.p is None:
            return Poly(tuple(_mul_z(self.coeffs, other.coeffs)))
        return Poly(tuple(_mul_p(self.coeffs, other.coeffs, self.p)), self.p)

    __rmul__ = __mul__

    def __divmod__(self, other: "Poly"):
        self._check(other)
        if self.p is None:
            raise TypeError("divmod is only defined over F_p")
        q, r = _divmod_p(self.coeffs, other.coeffs, self.p)
        return Poly(tuple(q), self.p), Poly(tuple(r), self.p)

    def __mod__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[1]

    def __floordiv__(self, other: "Poly") -> "Poly":
        return divmod(self, other)[0]

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc % self.p if self.p is not None else acc

    def reduce(self, p: int) -> "Poly":
        return Poly(self.coeffs, p)

    def derivative(self) -> "Poly":
        return Poly(tuple(_derivative(self.coeffs)), self.p)

    def monic(self) -> "Poly":
        if self.p is None:
            raise TypeError("monic is only defined over F_p")
        return Poly(tuple(_monic_p(self.coeffs, self.p)), self.p)

    def content(self) -> int:
        return _content(self.coeffs)

    def primitive(self) -> "Poly":
        """Divide out the content; the leading coefficient is made positive."""
        g = self.content()
        if g == 0:
            return self
        if self.lead < 0:
            g = -g
        return Poly(tuple(c // g for c in self.coeffs))

    def gcd(self, other: "Poly") -> "Poly":
        self._check(other)
        if self.p is None:
            raise TypeError("gcd is implemented over F_p only")
        return Poly(tuple(_gcd_p(self.coeffs, other.coeffs, self.p)), self.p)

    def powmod(self, e: int, modulus: "Poly") -> "Poly":
        self._check(modulus)
        return Poly(tuple(_powmod_p(self.coeffs, e, modulus.coeffs, self.p)), self.p)

    def __str__(self) -> str:
        return format_poly(self.coeffs)


def format_poly(coeffs: Sequence[int], var: str = "x") -> str:
    terms = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if not c:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        if i == 0:
            body = str(mag)
        else:
            mono = var if i == 1 else f"{var}^{i}"
            body = mono if mag == 1 else f"{mag}*{mono}"
        terms.append((sign, body))
    if not terms:
        return "0"
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out


def _require_fp(f: Poly, p: int) -> list:
    if f.p is None:
        f = f.reduce(p)
    elif f.p != p:
        raise ValueError("modulus mismatch")
    return list(f.coeffs)


def poly_mod_pow_x(p: int, f: Poly) -> Poly:
    """x**p reduced modulo f over F_p."""
    c = _require_fp(f, p)
    if len(c) < 2:
        raise MathDomainError("x^p mod f needs deg f >= 1")
    return Poly(tuple(_x_pow_mod_p(p, c, p)), p)


def count_distinct_roots_modp(f: Poly, p: int) -> int:
    """Number of distinct roots in F_p, as deg gcd(x^p - x mod f, f)."""
    c = _require_fp(f, p)
    if not c:
        raise MathDomainError("the zero polynomial has every element as a root")
    if len(c) == 1:
        return 0
    h = _sub(_x_pow_mod_p(p, c, p), [0, 1])
    h = [v % p for v in h]
    return len(_gcd_p(c, _trim(h), p)) - 1


def ddf_modp(f: Poly, p: int) -> list[tuple[int, Poly]]:
    """Distinct-degree factorization of a squarefree f over F_p.

    Returns (d, g_d) pairs where g_d is the product of the monic irreducible
    factors of degree d.
    """
    c = _monic_p(_require_fp(f, p), p)
    out = []
    h = [0, 1]
    i = 1
    while len(c) - 1 >= 2 * i:
        h = _powmod_p(h, p, c, p)
        g = _gcd_p(c, [v % p for v in _sub(h, [0, 1])], p)
        if len(g) > 1:
            out.append((i, Poly(tuple(g), p)))
            c = _divmod_p(c, g, p)[0]
            h = _mod_p(h, c, p)
        i += 1
    if len(c) > 1:
        out.append((len(c) - 1, Poly(tuple(c), p)))
    return out


def resultant_z(f: Poly, g: Poly) -> int:
    if f.p is not None or g.p is not None:
        raise TypeError("resultant_z expects integer polynomials")
    return _resultant_z(f.coeffs, g.coeffs)


def discriminant_z(f: Poly) -> int:
    n = f.degree
    if n < 1:
        raise MathDomainError("discriminant needs deg f >= 1")
    r = _resultant_z(f.coeffs, _derivative(f.coeffs))
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * r // f.lead


def form_resultant(f: Sequence[int], g: Sequence[int], d: int, e: int | None = None) -> int:
    """Resultant of binary forms given dehomogenized coefficients and formal degrees.

    ``f`` holds the coefficients of F(x, 1) with formal degree ``d`` and ``g``
    those of G(x, 1) with formal degree ``e`` (default ``d``). A drop in actual
    degree is a root at infinity.
    """
    e = d if e is None else e
    f, g = _trim(list(f)), _trim(list(g))
    if not f or not g:
        return 0
    df, dg = len(f) - 1, len(g) - 1
    if df < d and dg < e:
        return 0
    if df == d:
        # Res_{d,e}(f, g) = lead(f)^(e - dg) * Res_{d,dg}(f, g)
        return f[-1] ** (e - dg) * _resultant_z(f, g)
    sign = -1 if (d * e + e * df) % 2 else 1
    return sign * g[-1] ** (d - df) * _resultant_z(f, g)


def gcd_z(a: Sequence[int], b: Sequence[int]) -> list:
    """Primitive gcd over Z[x] (primitive PRS), positive leading coefficient."""
    a, b = _trim(list(a)), _trim(list(b))
    if not a:
        a, b = b, a
    if not b:
        if not a:
            return []
        g = _content(a) * (1 if a[-1] > 0 else -1)
        return [c // g for c in a]
    if len(a) < len(b):
        a, b = b, a
    a = [c // _content(a) for c in a]
    b = [c // _content(b) for c in b]
    while b:
        r = _prem_z(a, b)
        a, b = b, ([c // _content(r) for c in r] if r else [])
    if a[-1] < 0:
        a = [-c for c in a]
    return a
