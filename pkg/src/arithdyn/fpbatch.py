"""Vectorized F_p arithmetic, one row per prime.

Used by the sweep engines: a chunk of primes is processed as int64 arrays, so
every modulus must satisfy p < 2**31 (products of residues fit in int64).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

BATCH_PRIME_LIMIT = 1 << 31
_I63 = (1 << 63) - 1
_LIMB = 30


def residues(c: int, P: np.ndarray) -> np.ndarray:
    """c mod p for every p in P."""
    if -(1 << 62) < c < (1 << 62):
        return np.int64(c) % P
    neg = c < 0
    c = -c if neg else c
    limbs = []
    while c:
        limbs.append(c & ((1 << _LIMB) - 1))
        c >>= _LIMB
    r = np.zeros_like(P)
    for limb in reversed(limbs):
        r = ((r << _LIMB) + limb) % P
    return (-r) % P if neg else r


def poly_residues(coeffs: Sequence[int], P: np.ndarray) -> np.ndarray:
    out = np.empty((len(P), len(coeffs)), dtype=np.int64)
    for i, c in enumerate(coeffs):
        out[:, i] = residues(c, P)
    return out


def powmod(base: np.ndarray, E: np.ndarray, P: np.ndarray) -> np.ndarray:
    """base**E mod P elementwise, exponents varying per row."""
    result = np.ones_like(P)
    base = base % P
    for bit in range(int(E.max()).bit_length() - 1, -1, -1):
        result = result * result % P
        mask = ((E >> bit) & 1).astype(bool)
        result = np.where(mask, result * base % P, result)
    return result


def inverse(a: np.ndarray, P: np.ndarray) -> np.ndarray:
    return powmod(a, P - 2, P)


def _lazy_ok(P: np.ndarray, terms: int) -> bool:
    pm = int(P.max()) - 1
    return terms * pm * pm < _I63


def mulmod(a: np.ndarray, b: np.ndarray, f: np.ndarray, P: np.ndarray) -> np.ndarray:
    """a*b mod f, rows independent; f is monic of degree n, a and b have n columns."""
    B, n = a.shape
    Pc = P[:, None]
    lazy = _lazy_ok(P, 2 * n + 2)
    prod = np.zeros((B, 2 * n - 1), dtype=np.int64)
    for i in range(n):
        prod[:, i : i + n] += a[:, i : i + 1] * b
        if not lazy:
            prod[:, i : i + n] %= Pc
    for k in range(2 * n - 2, n - 1, -1):
        c = prod[:, k] % P
        prod[:, k - n : k] -= c[:, None] * f[:, :n]
        if not lazy:
            prod[:, k - n : k] %= Pc
    return prod[:, :n] % Pc


def x_pow_p_mod(f: np.ndarray, P: np.ndarray) -> np.ndarray:
    """x**p mod f(x) over F_p for each row; f monic with n+1 columns."""
    B, L = f.shape
    n = L - 1
    r = np.zeros((B, n), dtype=np.int64)
    r[:, 0] = 1
    if n == 1:
        # x = -f[0] in F_p[x]/(x + f0)
        return powmod(-f[:, 0] % P, P, P)[:, None]
    Pc = P[:, None]
    for bit in range(int(P.max()).bit_length() - 1, -1, -1):
        r = mulmod(r, r, f, P)
        mask = ((P >> bit) & 1).astype(bool)
        if mask.any():
            top = r[:, n - 1]
            shifted = np.empty_like(r)
            shifted[:, 0] = 0
            shifted[:, 1:] = r[:, : n - 1]
            shifted = (shifted - top[:, None] * f[:, :n]) % Pc
            r = np.where(mask[:, None], shifted, r)
    return r


def degrees(a: np.ndarray) -> np.ndarray:
    """Row-wise degree; -1 for the zero polynomial."""
    L = a.shape[1]
    nz = a != 0
    return np.where(nz.any(axis=1), L - 1 - np.argmax(nz[:, ::-1], axis=1), -1)


def gcd_degree(a: np.ndarray, b: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Row-wise degree of gcd(a, b) over F_p by fraction-free Euclid steps."""
    a, b = a.copy(), b.copy()
    B, L = a.shape
    if b.shape[1] < L:
        b = np.concatenate([b, np.zeros((B, L - b.shape[1]), dtype=np.int64)], axis=1)
    rows = np.arange(B)
    cols = np.arange(L)
    Pc = P[:, None]
    da, db = degrees(a), degrees(b)
    for _ in range(2 * L + 2):
        active = db >= 0
        if not active.any():
            break
        swap = active & (da < db)
        if swap.any():
            ta = a[swap].copy()
            a[swap] = b[swap]
            b[swap] = ta
            da, db = np.where(swap, db, da), np.where(swap, da, db)
            active = db >= 0
        shift = np.where(active, da - db, 0)
        la = a[rows, np.maximum(da, 0)]
        lb = b[rows, np.maximum(db, 0)]
        idx = cols[None, :] - shift[:, None]
        bs = np.where(idx >= 0, np.take_along_axis(b, np.clip(idx, 0, L - 1), axis=1), 0)
        new = (lb[:, None] * a - la[:, None] * bs) % Pc
        a = np.where(active[:, None], new, a)
        da = np.where(active, degrees(a), da)
    return da


def eval_affine(coeffs: Sequence[int], xs: np.ndarray, p: int) -> np.ndarray:
    """Horner evaluation of an integer polynomial at every x in xs, modulo p (p <= 2**31)."""
    acc = np.zeros_like(xs)
    for c in reversed(coeffs):
        acc = (acc * xs + c % p) % p
    return acc


def inverse_scalar_mod(a: np.ndarray, p: int) -> np.ndarray:
    return powmod(a, np.full_like(a, p - 2), np.full_like(a, p))
