"""Event-driven VRJP on a lazily grown b-ary tree (Poisson construction).

Each ordered edge ``(u, v)`` carries its own keyed exponential clock. While
the walk sits at ``u``, the clock of ``(u, v)`` runs at speed ``L(v)``, and
the walk jumps along the first edge whose clock reaches its next arrival.
The store keeps, per directed edge, the part of the current inter-arrival
that is still unused. The candidate wait from ``u`` is therefore
``residual(u, v) / L(v, xi)``, with ``L`` frozen at the entry time ``xi``
(no neighbour's weight moves while ``u`` is occupied). The winning edge
draws its next inter-arrival ``h_{j+1}``. Losing edges keep their
residual, minus the clock time they used during the visit.

``clock_mode="literal"`` drops that subtraction: every visit re-divides the
full unconsumed ``h_{j_v}`` by the current weight. First visits behave the
same in both modes. On returns the literal rule is not the VRJP law; the
rate-based cross-check in :mod:`vrjp.engine.gillespie` picks this up. The
mode is kept only for that comparison.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..exceptions import MalformedConfigError
from ..utils import check_branching, check_positive_int, check_seed
from .clocks import PARENT, KeyedClock
from .trajectory import Trajectory

__all__ = ["RunConfig", "Walker", "run", "extension_run", "DEFAULT_EVENT_CAP"]

DEFAULT_EVENT_CAP = 50_000_000
_INF = math.inf


@dataclass(frozen=True)
class RunConfig:
    """Reproducible description of one VRJP run.

    At least one of ``max_level``, ``max_events`` and ``max_time`` must be
    finite. ``depth_limit`` truncates the tree below that level (the finite
    subtree ``G(k)``); together with ``b = 1`` it gives the two-vertex chain.
    ``root_weight`` and ``child_weight`` override the initial weights of the
    root and of its child 0. ``start_at_child`` starts the walk at that child.
    """

    b: int
    seed: int
    max_level: int | None = None
    max_events: int | None = None
    max_time: float | None = None
    depth_limit: int | None = None
    root_weight: float = 1.0
    child_weight: float = 1.0
    start_at_child: bool = False
    clock_mode: str = "residual"
    event_cap: int = DEFAULT_EVENT_CAP

    def __post_init__(self):
        try:
            check_branching(self.b)
            check_seed(self.seed)
            check_positive_int(self.max_level, "max_level", allow_none=True)
            check_positive_int(self.max_events, "max_events", allow_zero=True, allow_none=True)
            check_positive_int(self.depth_limit, "depth_limit", allow_none=True)
        except (TypeError, ValueError) as exc:
            raise MalformedConfigError(str(exc)) from exc
        if self.max_level is None and self.max_events is None and self.max_time is None:
            raise MalformedConfigError("at least one stop criterion must be finite")
        if self.max_time is not None and not self.max_time >= 0:
            raise MalformedConfigError("max_time must be >= 0")
        if not (self.root_weight > 0 and self.child_weight > 0):
            raise MalformedConfigError("initial weights must be positive")
        if self.clock_mode not in ("residual", "literal"):
            raise MalformedConfigError("clock_mode must be 'residual' or 'literal'")
        if self.depth_limit is not None and self.max_level is not None and self.max_level > self.depth_limit:
            raise MalformedConfigError("max_level lies below the depth limit and can never be reached")

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)


class Walker:
    """Mutable state of one walk: the explored arena plus all edge clocks.

    The arena holds one record per explored vertex: its key, local time,
    level, parent and children, and the residual and used-count of each
    outgoing clock. Outgoing clocks are set up when the vertex is entered for
    the first time. Slots ``0..b-1`` are the children and slot ``b`` is the
    parent.
    """

    def __init__(self, config, *, clock=None, anchor=(), children=None, depth=None, ray=None):
        self.config = config
        self.b = b = config.b
        self.clock = clock if clock is not None else KeyedClock(config.seed)
        self.literal = config.clock_mode == "literal"
        self.anchor = tuple(anchor)
        self.anchor_level = len(self.anchor)
        self.allowed = tuple(range(b)) if children is None else tuple(sorted(set(children)))
        if any(not 0 <= c < b for c in self.allowed):
            raise MalformedConfigError(f"child indices must lie in 0..{b - 1}")
        self.depth = depth if depth is not None else config.depth_limit
        self.ray = None if ray is None else tuple(int(c) for c in ray)
        if self.ray is not None:
            if any(not 0 <= c < b for c in self.ray):
                raise MalformedConfigError(f"ray child indices must lie in 0..{b - 1}")
            self.depth = len(self.ray) if self.depth is None else min(self.depth, len(self.ray))
        self.key = []
        self.L = []
        self.a = []
        self.level = []
        self.par = []
        self.chl = []
        self.res = []
        self.cnt = []
        self.slots = []
        self.nbr = []
        self.first_entry = []
        self.entered_from = []
        self.entered_move = []
        self.t = 0.0
        root = self._new_node(self.clock.key(self.anchor), self.anchor_level, -1)
        if self.anchor == () and (config.start_at_child or config.child_weight != 1.0):
            self.a[root] = self.L[root] = float(config.root_weight)
            if 0 not in self.allowed or not self._has_children(root):
                raise MalformedConfigError("child 0 of the root is outside the simulated tree")
            kid = self._new_node(self.clock.child_key(self.key[root], 0), 1, root)
            self.chl[root][0] = kid
            self.a[kid] = self.L[kid] = float(config.child_weight)
        elif self.anchor == ():
            self.a[root] = self.L[root] = float(config.root_weight)
        start = self.chl[root][0] if config.start_at_child else root
        self.u = start
        self._enter(start, -1, 0)

    # arena -----------------------------------------------------------------
    def _new_node(self, key, level, parent):
        self.key.append(key)
        self.L.append(1.0)
        self.a.append(1.0)
        self.level.append(level)
        self.par.append(parent)
        self.chl.append([-1] * (self.b + 1))
        self.res.append(None)
        self.cnt.append(None)
        self.slots.append(())
        self.nbr.append(None)
        self.first_entry.append(-1)
        self.entered_from.append(-1)
        self.entered_move.append(0)
        return len(self.key) - 1

    def _has_children(self, u):
        return self.depth is None or self.level[u] - self.anchor_level < self.depth

    def _has_parent(self, u):
        return self.level[u] > self.anchor_level

    def _enter(self, u, frm, move):
        if self.res[u] is not None:
            return
        b = self.b
        r = [_INF] * (b + 1)
        slots = []
        if not self._has_children(u):
            kids = ()
        elif self.ray is not None:
            kids = (self.ray[self.level[u] - self.anchor_level],)
        else:
            kids = self.allowed
        up, down = self.clock.first_draws(self.key[u], kids)
        for c in kids:
            r[c] = down[c]
            slots.append(c)
        if self._has_parent(u):
            r[b] = up
            slots.append(b)
        self.res[u] = r
        self.slots[u] = tuple(slots)
        nbr = self.chl[u]
        nbr[b] = self.par[u]
        self.nbr[u] = nbr
        self.cnt[u] = [1] * (b + 1)
        self.entered_from[u] = frm
        self.entered_move[u] = move

    # dynamics --------------------------------------------------------------
    def choose(self):
        """Winning slot and wait at the current vertex, without moving.

        Ties between candidate waits are broken towards the child with the
        smallest index; the parent comes last.
        """
        u = self.u
        L = self.L
        r = self.res[u]
        nb = self.nbr[u]
        best = _INF
        arg = -1
        for sl in self.slots[u]:
            v = nb[sl]
            w = r[sl] / (L[v] if v >= 0 else 1.0)
            if w < best:
                best = w
                arg = sl
        if arg < 0:
            raise MalformedConfigError("the simulated tree is a single vertex; no jump is possible")
        return arg, best

    def step(self):
        """Make one jump; return ``(new vertex index, jump time)``."""
        arg, wait = self.choose()
        return self._commit(self.u, arg, wait)

    def _commit(self, u, arg, wait):
        L = self.L
        r = self.res[u]
        nb = self.nbr[u]
        if not self.literal:
            for sl in self.slots[u]:
                if sl != arg:
                    v = nb[sl]
                    r[sl] -= wait * (L[v] if v >= 0 else 1.0)
        cnt = self.cnt[u]
        cnt[arg] += 1
        b = self.b
        r[arg] = self.clock.draw(self.key[u], PARENT if arg == b else arg, cnt[arg])
        L[u] += wait
        self.t += wait
        v = nb[arg]
        if v < 0:
            v = self._new_node(self.clock.child_key(self.key[u], arg), self.level[u] + 1, u)
            nb[arg] = v
        if self.res[v] is None:
            self._enter(v, u, -1 if arg == b else arg)
        self.u = v
        return v, self.t


def _simulate(config, walker, meta):
    cfg = config
    max_level = cfg.max_level if cfg.max_level is not None else -1
    max_events = cfg.max_events if cfg.max_events is not None else cfg.event_cap
    max_time = cfg.max_time if cfg.max_time is not None else _INF
    if cfg.max_events is None and max_events > cfg.event_cap:
        max_events = cfg.event_cap
    times = [0.0]
    nodes = [walker.u]
    start = walker.u
    walker.first_entry[start] = 0
    level = walker.level
    stop = None
    if cfg.max_events == 0:
        stop = "max-events"
    elif level[start] == max_level:
        stop = "max-level"
    n = 0
    # hot loop: walker.choose followed by walker._commit, with locals bound
    L = walker.L
    res = walker.res
    nbrs = walker.nbr
    slots_of = walker.slots
    cnts = walker.cnt
    keys = walker.key
    first = walker.first_entry
    draw = walker.clock.draw
    literal = walker.literal
    b = walker.b
    u = walker.u
    t = walker.t
    while stop is None:
        r = res[u]
        nb = nbrs[u]
        slots = slots_of[u]
        best = _INF
        arg = -1
        for sl in slots:
            v = nb[sl]
            w = r[sl] / (L[v] if v >= 0 else 1.0)
            if w < best:
                best = w
                arg = sl
        if arg < 0:
            raise MalformedConfigError("the simulated tree is a single vertex; no jump is possible")
        if t + best > max_time:
            L[u] += max_time - t
            t = max_time
            stop = "max-time"
            break
        if not literal:
            for sl in slots:
                if sl != arg:
                    v = nb[sl]
                    r[sl] -= best * (L[v] if v >= 0 else 1.0)
        cnt = cnts[u]
        j = cnt[arg] + 1
        cnt[arg] = j
        r[arg] = draw(keys[u], PARENT if arg == b else arg, j)
        L[u] += best
        t += best
        v = nb[arg]
        if v < 0:
            v = walker._new_node(walker.clock.child_key(keys[u], arg), level[u] + 1, u)
            nb[arg] = v
        if res[v] is None:
            walker._enter(v, u, -1 if arg == b else arg)
        u = v
        n += 1
        times.append(t)
        nodes.append(v)
        if first[v] < 0:
            first[v] = n
        if level[v] == max_level:
            stop = "max-level"
        elif n >= max_events:
            if cfg.max_events is None:
                raise MalformedConfigError(
                    f"event cap {cfg.event_cap} reached before any stop criterion"
                )
            stop = "max-events"
    walker.u = u
    walker.t = t
    return _to_trajectory(cfg, walker, times, nodes, stop, meta)


def _to_trajectory(cfg, walker, times, nodes, stop, meta):
    visited = [k for k in range(len(walker.key)) if walker.first_entry[k] >= 0]
    visited.sort(key=lambda k: walker.first_entry[k])
    index = np.full(len(walker.key), -1, dtype=np.int64)
    index[visited] = np.arange(len(visited))
    ref = np.array([index[walker.entered_from[k]] if walker.entered_from[k] >= 0 else 0 for k in visited],
                   dtype=np.int64)
    move = np.array([walker.entered_move[k] for k in visited], dtype=np.int64)
    ref[0] = 0
    move[0] = 0
    return Trajectory(
        b=cfg.b,
        seed=cfg.seed,
        times=np.asarray(times, dtype=np.float64),
        nodes=index[np.asarray(nodes, dtype=np.int64)],
        ref=ref,
        move=move,
        levels=np.array([walker.level[k] for k in visited], dtype=np.int64),
        local_times=np.array([walker.L[k] for k in visited], dtype=np.float64),
        initial_weights=np.array([walker.a[k] for k in visited], dtype=np.float64),
        end_time=float(walker.t),
        stop_reason=stop,
        origin=(0,) if cfg.start_at_child and walker.anchor == () else walker.anchor,
        meta=dict(meta),
    )


def run(config, *, clock=None):
    """Simulate VRJP from time 0 until the first stop criterion holds."""
    walker = Walker(config, clock=clock)
    return _simulate(config, walker, {})


def extension_run(config, subtree_root=(), *, children=None, depth=None, ray=None, clock=None):
    """VRJP on the subtree rooted at ``subtree_root``, driven by the same clocks.

    The subtree is ``Lambda_nu`` (all descendants), optionally pruned to the
    child indices in ``children`` and to ``depth`` levels below its root. A
    constant ray is ``children=(c,)``; ``ray`` gives one child index per
    level below the subtree root and confines the walk to that path. The clocks of its edges are exactly those
    :func:`run` would use, so the result is the extension of the full walk.
    The walk starts at ``subtree_root`` with all weights equal to 1 (the
    weight overrides of ``config`` only apply to the whole tree).
    """
    anchor = tuple(int(c) for c in subtree_root)
    if any(not 0 <= c < config.b for c in anchor):
        raise MalformedConfigError(f"subtree root {anchor} is not a vertex of the {config.b}-ary tree")
    if depth is None and config.depth_limit is not None:
        depth = config.depth_limit - len(anchor)
    if anchor == () and children is None and ray is None and depth == config.depth_limit:
        return run(config, clock=clock)
    cfg = config.replace(root_weight=1.0, child_weight=1.0, start_at_child=False)
    walker = Walker(cfg, clock=clock, anchor=anchor, children=children, depth=depth, ray=ray)
    return _simulate(cfg, walker, {"subtree_root": list(anchor)})
