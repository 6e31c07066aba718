import random

import pytest

from arithdyn.projmap import ProjPoint, RationalMap


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def sq():
    return RationalMap.polynomial((0, 0, 1))


def poly_map(*coeffs):
    return RationalMap.polynomial(coeffs)


def pt(v):
    return ProjPoint.infinity() if v == "inf" else ProjPoint.from_value(v)
