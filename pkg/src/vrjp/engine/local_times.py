"""Local-time samplers on the two-vertex chain and on rays."""

from __future__ import annotations

import numpy as np

from ..utils import check_seed, derive_seed
from .simulator import RunConfig, Walker, extension_run

__all__ = ["ray_root_local_time", "two_vertex_local_time", "two_vertex_samples"]


def two_vertex_local_time(c, t, seed):
    """``L(0, xi(t))`` on ``{0, 1}`` started at 1 with weights ``a_0 = c``, ``a_1 = 1``.

    ``xi(t)`` is the moment the local time at vertex 1 reaches ``t``. The
    chain is the root of the 1-ary tree and its child, cut at depth 1.
    """
    if not t >= 1:
        raise ValueError("t must be >= 1")
    cfg = RunConfig(b=1, seed=check_seed(seed), max_events=1, depth_limit=1, root_weight=float(c), start_at_child=True)
    w = Walker(cfg)
    kid = w.u
    root = w.par[kid]
    L = w.L
    while True:
        slot, wait = w.choose()
        if w.u == kid and L[kid] + wait >= t:
            return L[root]
        w._commit(w.u, slot, wait)


def two_vertex_samples(c, t, replicas, seed):
    return np.array([two_vertex_local_time(c, t, derive_seed(seed, r)) for r in range(replicas)])


def ray_root_local_time(b, n, seed):
    """``L^sigma(sigma_0, T_n^sigma)`` for the extension of the walk to the ray ``0, 00, 000, ...``."""
    traj = extension_run(RunConfig(b=b, seed=seed, max_level=n), (), children=(0,))
    return float(traj.local_times[0])
