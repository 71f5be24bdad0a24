"""Model constants for the b-ary tree."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..exceptions import SubcriticalError
from ..utils import check_branching
from .bounds import phi_b
from .offspring import good_probability, offspring_p, offspring_q
from .pgf import Compose, Iterate, Leaf, smallest_fixed_point
from .quadrature import integrate_exp

__all__ = ["ModelConstants", "compute_constants", "zeta_for_mean", "return_lower_bound"]


@dataclass(frozen=True)
class ModelConstants:
    b: int
    good_prob: float
    m: float
    zeta: int
    alpha_lower: float
    beta_b: float
    gamma_b: float
    phi_b: float

    @property
    def cut_success(self):
        """Per-block success probability ``(1 - gamma_b) phi_b``."""
        return (1.0 - self.gamma_b) * self.phi_b

    def as_dict(self):
        out = asdict(self)
        out["cut_success"] = self.cut_success
        return out


def zeta_for_mean(m):
    """Smallest integer ``z >= 2`` with ``m^(z-1) (m - 1) > 1``."""
    if m <= 1.0:
        raise SubcriticalError(f"subcritical good cluster: m = {m:.6g} <= 1")
    z = 2
    while not m ** (z - 1) * (m - 1.0) > 1.0:
        z += 1
    return z


def return_lower_bound(b):
    """Probability that the walk returns to the root in exactly two jumps."""
    return integrate_exp(lambda z: (1.0 + z) / (b + 1.0 + z) * b, rate=float(b))


def compute_constants(b):
    """All closed-form constants for VRJP on the b-ary tree.

    Raises
    ------
    SubcriticalError
        If ``m = b * good_prob <= 1`` (this happens for ``b <= 2``).
    """
    b = check_branching(b)
    good = good_probability()
    p = offspring_p(b)
    m = p.mean()
    if m <= 1.0:
        raise SubcriticalError(f"subcritical good cluster: m = {m:.6g} <= 1 for b = {b}")
    zeta = zeta_for_mean(m)
    leaf_p = Leaf(p)
    thinned = Compose(Iterate(leaf_p, zeta - 1), Leaf(offspring_q(p)))
    return ModelConstants(
        b=b,
        good_prob=good,
        m=m,
        zeta=zeta,
        alpha_lower=return_lower_bound(b),
        beta_b=smallest_fixed_point(leaf_p),
        gamma_b=smallest_fixed_point(thinned),
        phi_b=phi_b(b),
    )
