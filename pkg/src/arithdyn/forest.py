"""Preimage forests of targets under maps, realized over F_p, and post-critical checks.

Over Q-bar the forest is only counted (a clean target gives d^n nodes at level
n); over F_p it is built exactly by inverting the functional graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .chebsweep import TargetSystem
from .errors import BadPrime, DegreeCapExceeded, ModulusTooLarge
from .exact import _add, _content, _mul_z, _prem_z, _resultant_z, _sub, _trim, format_poly, gcd_z
from .moddyn import CENSUS_MAX_P, image_table
from .projmap import (
    ProjPoint,
    ProjPointModP,
    RationalMap,
    apply,
    good_reduction,
    reduce_map,
    reduce_point,
    wronskian,
)

POSTCRITICAL_BOUND = 16
POSTCRITICAL_DEGREE_CAP = 1 << 16


# ---------------------------------------------------------------------------
# forests over F_p
# ---------------------------------------------------------------------------

@dataclass
class PreimageForestModP:
    """levels[t][k] is a list of (point index, parent position at level k-1)."""

    p: int
    depth: int
    roots: list = field(default_factory=list)
    levels: list = field(default_factory=list)

    def level_values(self, tree: int, k: int) -> list[ProjPointModP]:
        return [ProjPointModP.from_index(i, self.p) for i, _ in self.levels[tree][k]]

    def to_dict(self) -> dict:
        trees = []
        for (mi, target), lv in zip(self.roots, self.levels):
            nodes = []
            offsets = [0]
            for level in lv:
                offsets.append(offsets[-1] + len(level))
            for k, level in enumerate(lv):
                for idx, parent in level:
                    nodes.append({
                        "level": k,
                        "value": str(ProjPointModP.from_index(idx, self.p)),
                        "parent_index": None if k == 0 else offsets[k - 1] + parent,
                    })
            trees.append({"map": mi, "target": str(target), "nodes": nodes})
        return {"p": self.p, "depth": self.depth, "trees": trees}

    def write_json(self, fh: TextIO) -> None:
        json.dump(self.to_dict(), fh, indent=1)
        fh.write("\n")

    def write_edges(self, fh: TextIO) -> None:
        """One `child parent` line per edge; node ids are tree:level:value."""
        for t, lv in enumerate(self.levels):
            for k in range(1, len(lv)):
                prev = lv[k - 1]
                for idx, parent in lv[k]:
                    child = ProjPointModP.from_index(idx, self.p)
                    par = ProjPointModP.from_index(prev[parent][0], self.p)
                    fh.write(f"{t}:{k}:{child} {t}:{k - 1}:{par}\n")


def _preimage_lists(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(img, kind="stable")
    starts = np.searchsorted(img[order], np.arange(len(img) + 1))
    return order, starts


def build_forest_modp(system: TargetSystem, p: int, depth: int) -> PreimageForestModP:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if p > CENSUS_MAX_P:
        raise ModulusTooLarge(f"forests need p <= {CENSUS_MAX_P}, got {p}")
    for phi, _ in system.entries:
        if p <= phi.d or not good_reduction(phi, p):
            raise BadPrime(f"p={p} is not eligible for {phi}")
    forest = PreimageForestModP(p, depth)
    for mi, (phi, targets) in enumerate(system.entries):
        order, starts = _preimage_lists(image_table(reduce_map(phi, p)))
        for alpha in targets:
            forest.roots.append((mi, alpha))
            levels = [[(reduce_point(alpha, p).index, -1)]]
            for _ in range(depth):
                nxt = []
                for pos, (idx, _) in enumerate(levels[-1]):
                    nxt.extend((int(z), pos) for z in order[starts[idx]:starts[idx + 1]])
                levels.append(nxt)
            forest.levels.append(levels)
    return forest


def frobenius_fixed_count(forest: PreimageForestModP, level: int) -> list[int]:
    """F_p-rational nodes at the given level, per root."""
    if not 0 <= level <= forest.depth:
        raise ValueError(f"level must lie in [0, {forest.depth}]")
    return [len(lv[level]) for lv in forest.levels]


# ---------------------------------------------------------------------------
# post-critical check over Q-bar
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PostcriticalResult:
    """clean: alpha is not phi^k(c) for any critical c and 1 <= k <= bound.

    witness, when not clean, is (k, description of the critical point(s)).
    """

    clean: bool
    bound: int
    witness: tuple | None = None


def _reduce_pair(X: list, Y: list, w: list) -> tuple[list, list]:
    # pseudo-remainders mod w with a common power of lead(w), then strip content
    dw = len(w) - 1

    def exp(a):
        return max(0, len(a) - 1 - dw + 1)

    e = max(exp(X), exp(Y))
    lw = w[-1]
    X = [c * lw ** (e - exp(X)) for c in _prem_z(X, w)] if X else []
    Y = [c * lw ** (e - exp(Y)) for c in _prem_z(Y, w)] if Y else []
    X, Y = _trim(X), _trim(Y)
    g = _content(X + Y) if (X or Y) else 1
    return [c // g for c in X], [c // g for c in Y]


def _eval_pair(F, G, d, X, Y):
    """(F(X, Y), G(X, Y)) for polynomial coordinates X, Y."""
    px, py = [[1]], [[1]]
    for _ in range(d):
        px.append(_mul_z(px[-1], X))
        py.append(_mul_z(py[-1], Y))
    terms = [_mul_z(px[i], py[d - i]) for i in range(d + 1)]
    out = []
    for c in (F, G):
        acc: list = []
        for ci, t in zip(c, terms):
            if ci:
                acc = _add(acc, [ci * v for v in t])
        out.append(acc)
    return out


def postcritical_check(phi: RationalMap, alpha: ProjPoint,
                       bound: int = POSTCRITICAL_BOUND) -> PostcriticalResult:
    """One-sided test: is alpha in phi^k(critical points) for some 1 <= k <= bound?

    Affine critical points are the roots z of w(z) = W(z, 1); their orbits are
    followed as coordinate pairs in Q[z]/(w), and phi^k(c) = alpha for some root
    c iff b*X_k - a*Y_k shares a root with w. Infinity, when critical, is
    followed exactly.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if phi.d ** bound > POSTCRITICAL_DEGREE_CAP:
        raise DegreeCapExceeded(
            f"degree {phi.d}^{bound} exceeds post-critical cap {POSTCRITICAL_DEGREE_CAP}")
    a, b = alpha.x, alpha.y
    W = list(wronskian(phi))
    w = _trim(list(W))

    if W[-1] == 0:  # infinity is critical
        pt = ProjPoint.infinity()
        for k in range(1, bound + 1):
            pt = apply(phi, pt)
            if pt == alpha:
                return PostcriticalResult(False, bound, (k, "inf"))

    if len(w) > 1:
        X, Y = _reduce_pair([0, 1], [1], w)
        for k in range(1, bound + 1):
            X, Y = _reduce_pair(*_eval_pair(phi.F, phi.G, phi.d, X, Y), w)
            H = _sub([b * c for c in X], [a * c for c in Y])
            if not H or _resultant_z(w, H) == 0:
                factor = w if not H else gcd_z(w, H)
                return PostcriticalResult(False, bound, (k, _describe_factor(factor)))
    return PostcriticalResult(True, bound)


def _describe_factor(f: list) -> str:
    if len(f) == 2:
        return str(ProjPoint(-f[0], f[1]))
    return f"root of {format_poly(f, 'z')}"


@dataclass
class CompletenessReport:
    entries: list

    def to_dict(self) -> dict:
        return {"entries": self.entries}


def completeness_report(system: TargetSystem, depth: int,
                        bound: int = POSTCRITICAL_BOUND) -> CompletenessReport:
    out = []
    for mi, (phi, targets) in enumerate(system.entries):
        for alpha in targets:
            res = postcritical_check(phi, alpha, bound)
            out.append({
                "map": mi,
                "target": str(alpha),
                "clean": res.clean,
                "bound": bound,
                "witness": None if res.witness is None else list(res.witness),
                "expected_level_sizes": [phi.d**n for n in range(depth + 1)],
            })
    return CompletenessReport(out)
