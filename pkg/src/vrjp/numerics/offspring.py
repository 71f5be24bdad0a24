"""Finite offspring laws of the good-vertex cluster."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..exceptions import CancellationError
from ..utils import check_branching, check_probability_vector
from .quadrature import integrate_exp

__all__ = [
    "OffspringDistribution",
    "good_probability",
    "offspring_p",
    "offspring_q",
]

_NEGATIVE_TOL = 1e-9


@dataclass(frozen=True)
class OffspringDistribution:
    """Probability vector over ``{0, ..., K}``.

    ``probs[k]`` is the probability of exactly ``k`` offspring. Instances are
    immutable and hashable so they can key caches and sit inside PGF trees.
    """

    probs: tuple = field()

    def __post_init__(self):
        arr = check_probability_vector(self.probs)
        object.__setattr__(self, "probs", tuple(float(v) for v in arr))

    @property
    def K(self):
        return len(self.probs) - 1

    def as_array(self):
        return np.array(self.probs)

    def mean(self):
        return math.fsum(k * pk for k, pk in enumerate(self.probs))

    def __call__(self, x):
        """Generating function by Horner's rule; defined for any real ``x``."""
        acc = 0.0
        for pk in reversed(self.probs):
            acc = acc * x + pk
        return acc

    def derivative(self, x):
        acc = 0.0
        for k in range(self.K, 0, -1):
            acc = acc * x + k * self.probs[k]
        return acc


@lru_cache(maxsize=None)
def _shifted_ratio_integral(a):
    # int_0^inf (1+z)/(a+z) e^{-z} dz for integer a >= 1
    return integrate_exp(lambda z: (1.0 + z) / (a + z), 1.0)


def good_probability():
    """Probability that a fixed vertex at depth >= 2 is good."""
    return integrate_exp(lambda z: 1.0 / (2.0 + z), 1.0)


@lru_cache(maxsize=None)
def offspring_p(b):
    """Law of the number of good children of a vertex in the b-ary tree.

    ``p_k = sum_j C(b,k) C(k,j) (-1)^j I(j + b - k + 1)`` where ``I(a)`` is
    the exponential-weight integral of ``(1+z)/(a+z)``. The inner integrals
    depend only on ``a`` and are cached; the alternating sum uses compensated
    summation.
    """
    b = check_branching(b)
    probs = []
    for k in range(b + 1):
        terms = [
            math.comb(b, k) * math.comb(k, j) * (-1) ** j
            * _shifted_ratio_integral(j + b - k + 1)
            for j in range(k + 1)
        ]
        pk = math.fsum(terms)
        if pk < -_NEGATIVE_TOL:
            raise CancellationError(f"p_{k} = {pk!r} for b={b}: alternating sum lost precision")
        probs.append(max(pk, 0.0))
    return OffspringDistribution(tuple(probs))


def offspring_q(p):
    """Merge the first two classes of ``p``: one child is always removed."""
    probs = p.probs
    if len(probs) == 1:
        return OffspringDistribution(probs)
    q = (probs[0] + probs[1],) + tuple(probs[2:])
    return OffspringDistribution(q)
