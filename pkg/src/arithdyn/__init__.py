"""Arithmetic dynamics on P^1: iterate-polynomial prime sweeps, Frobenius statistics,
preimage forests, split dynamical Mordell-Lang scans and Lattes maps."""

__version__ = "0.1.0"

from .errors import ArithDynError, ConfigError, MathDomainError  # noqa: F401
from .projmap import ProjPoint, RationalMap, apply, iterate  # noqa: F401
