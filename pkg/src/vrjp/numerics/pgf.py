"""Probability generating functions of random sums, kept symbolic.

A random sum ``sum_{k=1}^V M_k`` with ``V ~ f`` and i.i.d. ``M_k ~ g`` has
PGF ``G_f(G_g(x))``. Iterated laws such as generation sizes of a branching
process, or the ``zeta``-block law ``p^(zeta-1)`` summed over ``q``, have
supports far too large to tabulate (``(b-1) b^(zeta-1)`` for ``b = 3``), so
they are only ever represented by the composition tree and evaluated
pointwise.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..exceptions import ConvergenceError
from .offspring import OffspringDistribution

__all__ = [
    "Compose",
    "Iterate",
    "Leaf",
    "PgfExpr",
    "as_expr",
    "pgf_eval",
    "pgf_mean",
    "smallest_fixed_point",
]


class PgfExpr:
    """Base node of a PGF composition tree."""

    def __call__(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def mean(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def at_zero(self):
        return self(0.0)


@dataclass(frozen=True)
class Leaf(PgfExpr):
    dist: OffspringDistribution

    def __call__(self, x):
        return self.dist(x)

    def mean(self):
        return self.dist.mean()


@dataclass(frozen=True)
class Compose(PgfExpr):
    """``outer`` applied to ``inner``: the law of an ``outer``-indexed sum."""

    outer: PgfExpr
    inner: PgfExpr

    def __call__(self, x):
        return self.outer(self.inner(x))

    def mean(self):
        return self.outer.mean() * self.inner.mean()


@dataclass(frozen=True)
class Iterate(PgfExpr):
    """``n``-fold self composition; ``n = 0`` is the identity."""

    base: PgfExpr
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("iteration count must be >= 0")

    def __call__(self, x):
        for _ in range(self.n):
            x = self.base(x)
        return x

    def mean(self):
        return self.base.mean() ** self.n


def as_expr(obj):
    if isinstance(obj, PgfExpr):
        return obj
    if isinstance(obj, OffspringDistribution):
        return Leaf(obj)
    return Leaf(OffspringDistribution(tuple(obj)))


def pgf_eval(expr, x):
    """Evaluate a PGF expression at ``x`` in [0, 1]."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    return as_expr(expr)(x)


def pgf_mean(expr):
    """Exact mean through the chain rule ``(G o H)'(1) = G'(1) H'(1)``."""
    return as_expr(expr).mean()


def smallest_fixed_point(expr, *, tol=1e-13, max_iter=10**6, fail_gap=1e-10):
    """Smallest root of ``x = G(x)`` in [0, 1] by monotone iteration from 0.

    Starting at 0 the iterates increase to the smallest fixed point, which is
    the extinction probability. When the law is critical or subcritical the
    limit is 1; iteration approaches it only geometrically (or like ``1/n`` at
    criticality), so once the iterates are within ``1e-8`` of 1 and the mean
    is at most 1 the exact value 1 is returned.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` steps leave a gap larger than ``fail_gap``; the
        exception carries the bracketing pair ``(x_n, G(x_n))``.
    """
    g = as_expr(expr)
    x = 0.0
    nxt = g(x)
    n = 0
    while abs(nxt - x) >= tol and n < max_iter:
        x, nxt = nxt, g(nxt)
        n += 1
    if abs(nxt - x) > fail_gap:
        raise ConvergenceError(
            f"fixed-point iteration stalled after {n} steps", estimates=(x, nxt)
        )
    x = min(max(nxt, 0.0), 1.0)
    if x > 1.0 - 1e-8 and g.at_zero() > 0.0 and g.mean() <= 1.0:
        return 1.0
    return x
