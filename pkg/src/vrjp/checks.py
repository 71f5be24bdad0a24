"""Statistical and pathwise cross-checks shared by ``validate`` and the tests."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from .engine import KeyedClock, RunConfig, extension_run, gillespie_run, run
from .regeneration import detect_cuts
from .utils import derive_seed

__all__ = [
    "first_child_violations",
    "horizon_misclassification",
    "neighbour_violations",
    "restricted_to_ray",
    "restriction_mismatch",
    "star_comparison",
]


def neighbour_violations(traj):
    """Number of consecutive event pairs that are not parent/child."""
    par = traj._parent_index()
    a = traj.nodes[:-1]
    b = traj.nodes[1:]
    ok = (par[a] == b) | (par[b] == a)
    return int(np.count_nonzero(~ok))


def _star_features(times, leaves, n_dirs=3, n_holds=5):
    code = 0
    for leaf in leaves[:n_dirs]:
        code = code * 3 + leaf
    return code, np.diff(times)[:n_holds]


def star_comparison(replicas, seed, *, n_jumps=50, clock_mode="residual"):
    """Compare the engine with the rate-based simulator on the 3-leaf star.

    Features per replica: the leaves chosen at jumps 1, 3, 5 (27 possible
    sequences) and the first five holding times. Returns the chi-square
    p-value of the 2 x 27 contingency table and a two-sample KS p-value for
    each holding time.
    """
    enc, gil = [], []
    holds_e, holds_g = [], []
    rng = np.random.default_rng(derive_seed(seed, 2**32))
    for r in range(replicas):
        tr = run(RunConfig(b=3, seed=derive_seed(seed, r), max_events=n_jumps, depth_limit=1, clock_mode=clock_mode))
        leaves = [tr.vertex(i)[0] for i in (1, 3, 5)]
        c, h = _star_features(tr.times, leaves)
        enc.append(c)
        holds_e.append(h)
        gt, gp = gillespie_run(3, 1, n_jumps, rng)
        c, h = _star_features(gt, [gp[i][0] for i in (1, 3, 5)])
        gil.append(c)
        holds_g.append(h)
    table = np.array([np.bincount(enc, minlength=27), np.bincount(gil, minlength=27)])
    table = table[:, table.sum(axis=0) > 0]
    chi2_p = float(stats.chi2_contingency(table)[1])
    he, hg = np.array(holds_e), np.array(holds_g)
    ks = [float(stats.ks_2samp(he[:, k], hg[:, k]).pvalue) for k in range(he.shape[1])]
    return {"chi2_p": chi2_p, "ks_p": ks, "passed": chi2_p > 0.01 and min(ks) > 0.01}


def first_child_violations(traj):
    """Vertices whose first visited child is not ``argmin_c h_1(nu, c)``."""
    clock = KeyedClock(traj.seed)
    first_kid = {}
    for k in range(1, traj.n_vertices):
        if traj.move[k] >= 0:
            first_kid.setdefault(int(traj.ref[k]), int(traj.move[k]))
    bad = 0
    kids = tuple(range(traj.b))
    for nu, c in first_kid.items():
        _, h = clock.first_draws(clock.key(traj.path(nu)), kids)
        if min(kids, key=lambda j: (h[j], j)) != c:
            bad += 1
    return bad


def restricted_to_ray(traj, ray):
    """Time-changed restriction of a root-started run to the path ``ray``.

    Returns the ray-vertex sequence (as levels) and the restricted entry
    times, i.e. the time spent on the ray before each entry.
    """
    on = np.zeros(traj.n_vertices, dtype=bool)
    on[0] = True
    for k in range(1, traj.n_vertices):
        lv = traj.levels[k]
        on[k] = on[traj.ref[k]] and lv <= len(ray) and traj.move[k] == ray[lv - 1]
    holds = np.diff(np.append(traj.times, traj.end_time))
    clock = 0.0
    levels, times = [], []
    for node, h in zip(traj.nodes, holds):
        if on[node]:
            lv = int(traj.levels[node])
            if not levels or levels[-1] != lv:
                levels.append(lv)
                times.append(clock)
            clock += h
    return levels, np.array(times)


def restriction_mismatch(b, seed, max_level, *, rtol=1e-9):
    """Compare the restricted full run with the extension run on a ray.

    The ray is the path from the root to the final vertex of the full run.
    Returns ``(n_compared, n_mismatched)``; the comparison covers the ray
    jumps the full run made before it stopped.
    """
    full = run(RunConfig(b=b, seed=seed, max_level=max_level))
    ray = full.path(full.nodes[-1])
    levels, times = restricted_to_ray(full, ray)
    n = len(levels)
    ext = extension_run(RunConfig(b=b, seed=seed, max_events=max(n - 1, 0)), (), ray=ray)
    ext_levels = ext.event_levels.tolist()[:n]
    ext_times = ext.times[:n]
    bad = sum(1 for x, y in zip(levels, ext_levels) if x != y)
    bad += int(np.count_nonzero(~np.isclose(times, ext_times, rtol=rtol, atol=1e-12)))
    return n, bad


def horizon_misclassification(seeds, max_level, extra, buffer):
    """Fraction of seeds whose cut set below ``max_level - buffer`` changes
    when the same run is continued to ``max_level + extra``."""
    bad = 0
    seeds = list(seeds)
    for s in seeds:
        short = {c.level for c in detect_cuts(run(RunConfig(b=3, seed=s, max_level=max_level)), buffer)}
        top = max_level - buffer
        long_ = run(RunConfig(b=3, seed=s, max_level=max_level + extra))
        ref = {c.level for c in detect_cuts(long_, buffer) if c.level <= top}
        bad += short != ref
    return bad / len(seeds) if seeds else math.nan
