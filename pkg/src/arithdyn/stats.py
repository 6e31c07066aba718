"""Binomial proportions with Wilson score intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

Z99 = NormalDist().inv_cdf(0.995)


def wilson_interval(hits: int, n: int, z: float = Z99) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = hits / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class DensityEstimate:
    hits: int
    eligible: int

    @property
    def proportion(self) -> Fraction | None:
        return Fraction(self.hits, self.eligible) if self.eligible else None

    @property
    def wilson99(self) -> tuple[float, float]:
        return wilson_interval(self.hits, self.eligible)

    def __add__(self, other: "DensityEstimate") -> "DensityEstimate":
        return DensityEstimate(self.hits + other.hits, self.eligible + other.eligible)

    def to_dict(self) -> dict:
        lo, hi = self.wilson99
        prop = self.proportion
        return {
            "hits": self.hits,
            "eligible": self.eligible,
            "proportion": None if prop is None else float(prop),
            "proportion_exact": None if prop is None else f"{prop.numerator}/{prop.denominator}",
            "wilson99_lo": lo,
            "wilson99_hi": hi,
        }
