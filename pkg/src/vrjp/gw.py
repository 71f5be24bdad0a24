"""Monte Carlo checks of the good-vertex cluster and its branching bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .engine.clocks import KeyedClock
from .exceptions import VRJPError
from .numerics import Compose, Iterate, Leaf, compute_constants, offspring_p, offspring_q, smallest_fixed_point
from .numerics.offspring import OffspringDistribution
from .utils import check_branching, check_positive_int, check_seed, derive_seed

__all__ = [
    "POPULATION_CAP",
    "SurvivalEstimate",
    "good_offspring_counts",
    "is_good",
    "survival_probability",
    "thinned_survival",
]

POPULATION_CAP = 10**7


def is_good(h_child, h_up, h_down):
    """Goodness of a vertex from ``h1(mu0, mu)``, ``h1(mu0, par mu0)``, ``h1(par mu0, mu0)``."""
    return h_child < h_up / (1.0 + h_down)


def good_offspring_counts(b, depth, replicas, seed, *, clock_factory=KeyedClock, condition_on_good=False):
    """Histogram over ``0..b`` of the number of good children of one vertex.

    Replica ``r`` uses the clocks of seed ``derive_seed(seed, r)`` at the
    vertex ``(0,) * (depth - 1)``. By default every replica counts; with
    ``condition_on_good`` only replicas in which that vertex is itself good
    (needs ``depth >= 3``) contribute. The unconditioned histogram is the
    one described by ``offspring_p``; conditioning biases it upwards.
    """
    b = check_branching(b)
    depth = check_positive_int(depth, "depth")
    replicas = check_positive_int(replicas, "replicas")
    seed = check_seed(seed)
    if depth < 2 or (condition_on_good and depth < 3):
        raise ValueError("depth must be >= 2 (>= 3 when conditioning on a good parent)")
    nu = (0,) * (depth - 1)
    kids = tuple(range(b))
    hist = np.zeros(b + 1, dtype=np.int64)
    for r in range(replicas):
        clock = clock_factory(derive_seed(seed, r))
        up_key = clock.key(nu[:-1])
        h_up, down = clock.first_draws(clock.key(nu), kids)
        h_down = clock.first_draws(up_key, (0,))[1][0]
        if condition_on_good:
            gp_up = clock.first_draws(up_key, ())[0]
            gp_down = clock.first_draws(clock.key(nu[:-2]), (0,))[1][0]
            if not is_good(h_down, gp_up, gp_down):
                continue
        thr = h_up / (1.0 + h_down)
        hist[sum(1 for c in kids if down[c] < thr)] += 1
    return hist


@dataclass(frozen=True)
class SurvivalEstimate:
    estimate: float
    stderr: float
    bias_bound: float
    replicas: int
    capped: int

    def __iter__(self):
        yield self.estimate
        yield self.stderr

    def as_dict(self):
        return asdict(self)


def _as_dist(dist):
    return dist if isinstance(dist, OffspringDistribution) else OffspringDistribution(tuple(dist))


def _simulate_steps(steps, replicas, seed, cap):
    """Alive count after applying the offspring laws in ``steps`` in order."""
    rng = np.random.default_rng(seed)
    pop = np.ones(replicas, dtype=np.int64)
    done = np.zeros(replicas, dtype=bool)
    for dist in steps:
        active = np.flatnonzero((pop > 0) & ~done)
        if active.size == 0:
            break
        probs = dist.as_array()
        counts = rng.multinomial(pop[active], probs)
        nxt = counts @ np.arange(probs.size, dtype=np.int64)
        if np.any(nxt < 0):
            raise VRJPError("population counter overflow")
        pop[active] = nxt
        over = active[nxt >= cap]
        done[over] = True
    alive = (pop > 0) | done
    return int(alive.sum()), int(done.sum())


def _estimate(alive, replicas, capped, bias):
    p = alive / replicas
    return SurvivalEstimate(p, math.sqrt(p * (1 - p) / replicas), bias, replicas, capped)


def _bias(expr, generations):
    """``limit - G^g(0)``: how far finite-horizon extinction is from its limit."""
    x = 0.0
    for _ in range(generations):
        x = expr(x)
    return max(0.0, smallest_fixed_point(expr) - x)


def survival_probability(dist, generations, replicas, seed, *, cap=POPULATION_CAP):
    """Fraction of Galton-Watson replicas alive after ``generations``.

    Populations reaching ``cap`` are declared survivors and frozen. The
    reported ``bias_bound`` is the gap between the extinction probability
    and its ``generations``-step value, both from the PGF.
    """
    dist = _as_dist(dist)
    generations = check_positive_int(generations, "generations", allow_zero=True)
    replicas = check_positive_int(replicas, "replicas")
    alive, capped = _simulate_steps([dist] * generations, replicas, check_seed(seed), cap)
    return _estimate(alive, replicas, capped, _bias(Leaf(dist), generations))


def thinned_survival(b, generations, replicas, seed, *, q=None, cap=POPULATION_CAP):
    """Survival of the block process: ``zeta - 1`` steps of ``p`` then one step of ``q``.

    ``generations`` counts blocks. ``q`` defaults to ``offspring_q(p)``.
    Refuses (``SubcriticalError``) when the good cluster is subcritical.
    """
    consts = compute_constants(b)
    p = offspring_p(consts.b)
    q = offspring_q(p) if q is None else _as_dist(q)
    generations = check_positive_int(generations, "generations", allow_zero=True)
    replicas = check_positive_int(replicas, "replicas")
    block = [p] * (consts.zeta - 1) + [q]
    alive, capped = _simulate_steps(block * generations, replicas, check_seed(seed), cap)
    expr = Compose(Iterate(Leaf(p), consts.zeta - 1), Leaf(q))
    return _estimate(alive, replicas, capped, _bias(expr, generations))
