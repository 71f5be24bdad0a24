"""Cut levels, cut times and regeneration blocks of finite trajectories."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..exceptions import CensoredTrajectoryError, InsufficientBlocksWarning, MalformedInputError
from ..utils import check_positive_int

__all__ = [
    "DEFAULT_BUFFER",
    "CutRecord",
    "RegenBlock",
    "blocks",
    "block_arrays",
    "cut_paths",
    "detect_cuts",
    "verify_cut",
]

# Levels within this distance of the top of a run are never classified.
# Validated by re-running seeds to a higher horizon (see the tests); the
# tail-bound sizing of the buffer is available through
# ``numerics.tail_bound_horizon`` but runs to thousands of levels for b = 3.
DEFAULT_BUFFER = 50


@dataclass(frozen=True)
class CutRecord:
    level: int
    time: float
    node: int
    weight_self: float
    weight_parent: float
    vertex: tuple | None = None

    def as_dict(self):
        return {
            "level": self.level,
            "time": self.time,
            "weight_self": self.weight_self,
            "weight_parent": self.weight_parent,
        }


@dataclass(frozen=True)
class RegenBlock:
    d_tau: float
    d_l: int


def _check_analysable(traj):
    if traj.stop_reason != "max-level":
        raise CensoredTrajectoryError(
            f"cut detection needs a run stopped at its max level, got stop reason {traj.stop_reason!r}"
        )
    if tuple(traj.origin) != () or traj.levels[0] != 0:
        raise MalformedInputError("cut detection needs a run started at the root")


def detect_cuts(traj, buffer=DEFAULT_BUFFER, *, with_paths=False):
    """Cut levels among ``1 .. final_level - buffer``.

    Level ``j`` is a cut level when the first jump after ``T_j`` goes up, the
    vertex ``X_{T_j}`` is never entered again and both it and its parent end
    with local time below 2. Vertices are entered once at most exactly when
    they are visited once, so the test reduces to visit counts.
    """
    _check_analysable(traj)
    buffer = check_positive_int(buffer, "buffer")
    top = traj.final_level
    last = top - buffer
    if last < 1:
        return []
    first = traj.first_hits()
    lv = traj.event_levels
    nodes = traj.nodes
    js = np.arange(1, last + 1)
    idx = first[js]
    x = nodes[idx]
    par = nodes[idx - 1]
    visits = np.bincount(nodes, minlength=traj.n_vertices)
    lt = traj.local_times
    ok = (lv[idx + 1] == js + 1) & (visits[x] == 1) & (lt[x] < 2.0) & (lt[par] < 2.0)
    hits = np.flatnonzero(ok)
    times = traj.times[idx[hits]]
    out = [
        CutRecord(int(js[h]), float(t), int(x[h]), float(lt[x[h]]), float(lt[par[h]]))
        for h, t in zip(hits, times)
    ]
    if with_paths and out:
        paths = cut_paths(traj, out)
        out = [CutRecord(c.level, c.time, c.node, c.weight_self, c.weight_parent, p) for c, p in zip(out, paths)]
    return out


def cut_paths(traj, cuts):
    """VertexIds of the cut vertices.

    Later cut vertices descend from earlier ones, so every path is a prefix
    of the deepest one and a single reconstruction suffices.
    """
    if not cuts:
        return []
    deepest = traj.path(cuts[-1].node)
    return [deepest[: c.level] for c in cuts]


def verify_cut(traj, level, events=None):
    """Check the three cut conditions at ``level`` straight from the events.

    Deliberately naive: works on VertexIds and recomputes local times from
    holding times instead of using the detector's arrays. ``events`` may
    hold ``list(traj.events())`` to share that work across levels.
    """
    _check_analysable(traj)
    if events is None:
        events = list(traj.events())
    pos = next((i for i, (_, v) in enumerate(events) if len(v) == level), None)
    if pos is None or pos + 1 >= len(events):
        return False
    x = events[pos][1]
    if len(events[pos + 1][1]) != level + 1:
        return False
    if any(v == x for _, v in events[pos + 1 :]):
        return False
    parent = x[:-1]
    weights = {x: traj.initial_weights[traj.nodes[pos]], parent: traj.initial_weights[traj.nodes[pos - 1]]}
    ends = [t for t, _ in events[1:]] + [traj.end_time]
    for (t, v), t_next in zip(events, ends):
        if v in weights:
            weights[v] += t_next - t
    return bool(weights[x] < 2.0 and weights[parent] < 2.0)


def blocks(cuts):
    """Consecutive differences of cut records; the block before the first cut is not used."""
    if len(cuts) < 2:
        warnings.warn("fewer than two cuts; no regeneration block", InsufficientBlocksWarning, stacklevel=2)
        return []
    return [RegenBlock(b.time - a.time, b.level - a.level) for a, b in zip(cuts, cuts[1:])]


def block_arrays(block_list):
    """``(d_tau, d_l)`` float arrays from RegenBlocks, ``(n, 2)`` arrays or pairs of arrays."""
    if isinstance(block_list, tuple) and len(block_list) == 2 and np.ndim(block_list[0]) == 1:
        d_tau, d_l = block_list
    elif len(block_list) and isinstance(block_list[0], RegenBlock):
        d_tau = [b.d_tau for b in block_list]
        d_l = [b.d_l for b in block_list]
    else:
        arr = np.asarray(block_list, dtype=np.float64).reshape(-1, 2)
        d_tau, d_l = arr[:, 0], arr[:, 1]
    return np.asarray(d_tau, dtype=np.float64), np.asarray(d_l, dtype=np.float64)
