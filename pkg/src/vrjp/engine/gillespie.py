"""Rate-based VRJP simulator used as an independent check of the engine.

From the current vertex ``x``, the walk waits an exponential time with rate
``sum_y L(y)`` over the neighbours ``y`` of ``x``. It then jumps to ``y``
with probability proportional to ``L(y)``. No edge clocks are involved.
Vertices are plain path tuples, so this is only meant for small finite
trees.
"""

from __future__ import annotations

import numpy as np

__all__ = ["gillespie_run"]


def _neighbours(path, b, depth):
    out = []
    if len(path) < depth:
        out.extend(path + (c,) for c in range(b))
    if path:
        out.append(path[:-1])
    return out


def gillespie_run(b, depth, n_jumps, rng):
    """Simulate ``n_jumps`` jumps on the ``b``-ary tree cut at ``depth``.

    Returns ``(times, vertices)`` with the initial state ``(0.0, ())`` first.
    """
    rng = np.random.default_rng(rng)
    exps = rng.standard_exponential(n_jumps)
    unif = rng.random(n_jumps)
    weight = {}
    x = ()
    t = 0.0
    times = [0.0]
    path = [x]
    for k in range(n_jumps):
        nbrs = _neighbours(x, b, depth)
        rates = [weight.get(y, 1.0) for y in nbrs]
        total = sum(rates)
        hold = exps[k] / total
        target = unif[k] * total
        acc = 0.0
        y = nbrs[-1]
        for cand, r in zip(nbrs, rates):
            acc += r
            if target < acc:
                y = cand
                break
        weight[x] = weight.get(x, 1.0) + hold
        t += hold
        x = y
        times.append(t)
        path.append(x)
    return np.array(times), path
