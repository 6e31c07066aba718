"""Text formats for maps, points, curves, prime ranges and subvariety equations.

Maps are written ``num : den`` (or just ``num`` for a polynomial) in the
variable x with ``^`` or ``**`` for powers; rational coefficients are
cleared. Points are integers, fractions ``a/b`` or ``inf``.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .dml import Subvariety
from .errors import MathDomainError, ParseError
from .lattes import ECPoint, EllipticCurve, rational_point
from .projmap import ProjPoint, RationalMap

_EXPR_CHARS = re.compile(r"^[0-9A-Za-z_+\-*/^() .]*$")
_TRANSFORMS = standard_transformations + (convert_xor,)


def _expr(text: str, names: dict):
    if not text.strip() or not _EXPR_CHARS.match(text):
        raise ParseError(f"cannot parse expression {text!r}")
    for word in re.findall(r"[A-Za-z_]\w*", text):
        if word not in names:
            raise ParseError(f"unknown name {word!r} in {text!r}")
    try:
        return parse_expr(text, local_dict=names, global_dict={"Integer": sympy.Integer,
                                                               "Rational": sympy.Rational,
                                                               "Symbol": sympy.Symbol},
                          transformations=_TRANSFORMS)
    except (SyntaxError, TypeError, ValueError, AttributeError, sympy.SympifyError) as exc:
        raise ParseError(f"cannot parse expression {text!r}: {exc}") from None


def _poly_coeffs(expr, x) -> list[Fraction]:
    try:
        poly = sympy.Poly(expr, x, domain="QQ")
    except (sympy.PolynomialError, sympy.GeneratorsNeeded, sympy.CoercionFailed):
        raise ParseError(f"{expr} is not a polynomial with rational coefficients") from None
    return [Fraction(int(c.p), int(c.q)) for c in reversed(poly.all_coeffs())]


def parse_map(text: str) -> RationalMap:
    x = sympy.Symbol("x")
    parts = text.split(":")
    if len(parts) > 2:
        raise ParseError(f"map {text!r} has more than one ':'")
    num = _poly_coeffs(_expr(parts[0], {"x": x}), x)
    den = _poly_coeffs(_expr(parts[1], {"x": x}), x) if len(parts) == 2 else [Fraction(1)]
    if not any(den):
        raise ParseError(f"map {text!r} has zero denominator")
    scale = math.lcm(*(c.denominator for c in num + den))
    try:
        return RationalMap.from_polys([int(c * scale) for c in num],
                                      [int(c * scale) for c in den])
    except MathDomainError as exc:
        raise ParseError(f"map {text!r}: {exc}") from None


def parse_point(text: str) -> ProjPoint:
    t = text.strip()
    if t.lower() in ("inf", "infinity", "oo"):
        return ProjPoint.infinity()
    try:
        return ProjPoint.from_value(Fraction(t))
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"cannot parse point {text!r}") from None


def parse_points(text: str) -> tuple:
    items = [s for s in text.split(",") if s.strip()]
    if not items:
        raise ParseError("empty target list")
    return tuple(parse_point(s) for s in items)


def parse_prime_range(text: str) -> tuple[int, int]:
    """``lo..hi``: primes p with lo <= p < hi."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", text)
    if not m:
        raise ParseError(f"prime range must look like lo..hi, got {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if lo > hi:
        raise ParseError(f"empty prime range {text!r} has lo > hi")
    return lo, hi


def parse_curve(text: str) -> EllipticCurve:
    parts = text.split()
    if len(parts) != 2:
        raise ParseError(f"curve must be 'a b', got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError(f"curve coefficients must be integers, got {text!r}") from None
    try:
        return EllipticCurve(a, b)
    except MathDomainError as exc:
        raise ParseError(str(exc)) from None


def parse_ec_point(E: EllipticCurve, text: str) -> ECPoint:
    t = text.strip()
    if t.lower() == "inf":
        return ECPoint.infinity()
    parts = t.split()
    if len(parts) != 2:
        raise ParseError(f"point must be 'x y' or 'inf', got {text!r}")
    try:
        x, y = Fraction(parts[0]), Fraction(parts[1])
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"cannot parse point {text!r}") from None
    try:
        return rational_point(E, x, y)
    except MathDomainError as exc:
        raise ParseError(str(exc)) from None


def parse_subvariety(lines, g: int) -> Subvariety:
    """One equation per line in X1, Y1, ..., Xg, Yg; blank lines and # comments skipped."""
    gens = []
    for i in range(1, g + 1):
        gens += [sympy.Symbol(f"X{i}"), sympy.Symbol(f"Y{i}")]
    names = {str(s): s for s in gens}
    eqs = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            lhs, rhs = line.split("=", 1)
            line = f"({lhs}) - ({rhs})"
        try:
            poly = sympy.Poly(_expr(line, names), *gens)
        except sympy.PolynomialError:
            raise ParseError(f"{line!r} is not a polynomial") from None
        if not all(c.is_Integer for c in poly.coeffs()):
            raise ParseError(f"equation {line!r} needs integer coefficients")
        eqs.append({tuple(e): int(c) for e, c in poly.terms()})
    if not eqs:
        raise ParseError("no equations given")
    try:
        return Subvariety(g, eqs)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
