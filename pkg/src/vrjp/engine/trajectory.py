"""Recorded VRJP paths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Trajectory", "STOP_REASONS"]

STOP_REASONS = ("max-level", "max-events", "max-time")


@dataclass(eq=False)
class Trajectory:
    """Jump times, visited vertices and final local times of one run.

    Vertices are numbered ``0, 1, ...`` in order of first visit. Vertex
    ``k > 0`` was first entered from ``ref[k]`` (an earlier vertex) by
    ``move[k]``: a child index, or ``-1`` for the step to the parent. Vertex 0
    sits at ``origin``. This keeps long paths cheap: reconstructing a
    :data:`VertexId` costs its depth, and nothing else ever does.

    ``local_times[k]`` is ``L(k, T_end)``: initial weight plus occupation time.
    Unvisited vertices keep their initial weight, 1 unless overridden.
    """

    b: int
    seed: int
    times: np.ndarray
    nodes: np.ndarray
    ref: np.ndarray
    move: np.ndarray
    levels: np.ndarray
    local_times: np.ndarray
    initial_weights: np.ndarray
    end_time: float
    stop_reason: str
    origin: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def n_events(self):
        return int(self.times.size)

    @property
    def n_vertices(self):
        return int(self.levels.size)

    @property
    def final_level(self):
        return int(self.levels[self.nodes[-1]])

    @property
    def event_levels(self):
        return self.levels[self.nodes]

    def path(self, node):
        """:data:`VertexId` (tuple of child indices from the root) of ``node``."""
        ups = 0
        tail = []
        k = int(node)
        while k != 0:
            mv = int(self.move[k])
            if mv < 0:
                ups += 1
            elif ups:
                ups -= 1
            else:
                tail.append(mv)
            k = int(self.ref[k])
        base = self.origin[: len(self.origin) - ups] if ups else self.origin
        return tuple(base) + tuple(reversed(tail))

    def vertex(self, i):
        return self.path(self.nodes[i])

    def events(self):
        """Iterate ``(time, VertexId)`` pairs; costs O(depth) per event."""
        for t, k in zip(self.times, self.nodes):
            yield float(t), self.path(k)

    def local_time_map(self):
        return {self.path(k): float(v) for k, v in enumerate(self.local_times)}

    def first_hits(self):
        """Event index of the first visit to each level (``T_j`` positions)."""
        lv = self.event_levels
        top = int(lv.max())
        first = np.full(top + 1, -1, dtype=np.int64)
        seen = lv[0]
        first[seen] = 0
        running = np.maximum.accumulate(lv)
        new = np.flatnonzero(np.diff(running) > 0) + 1
        first[running[new]] = new
        return first

    def parent_node(self, node):
        """Index of the parent of ``node`` among visited vertices, or -1."""
        return self._parent_index()[node]

    def _parent_index(self):
        cached = self.meta.get("_parent")
        if cached is not None:
            return cached
        parent = np.full(self.n_vertices, -1, dtype=np.int64)
        for k in range(1, self.n_vertices):
            r = int(self.ref[k])
            if self.move[k] >= 0:
                parent[k] = r
            else:
                parent[r] = k
        self.meta["_parent"] = parent
        return parent

    def occupation_residual(self):
        """``sum_v (L(v, T_end) - a_v) - T_end``, zero up to rounding."""
        return float(np.sum(self.local_times - self.initial_weights) - self.end_time)

    def to_dict(self, events=True):
        out = {
            "b": self.b,
            "seed": self.seed,
            "origin": list(self.origin),
            "stop_reason": self.stop_reason,
            "end_time": self.end_time,
            "n_events": self.n_events,
            "final_level": self.final_level,
        }
        if events:
            out.update(
                times=self.times.tolist(),
                nodes=self.nodes.tolist(),
                ref=self.ref.tolist(),
                move=self.move.tolist(),
                levels=self.levels.tolist(),
                local_times=self.local_times.tolist(),
                initial_weights=self.initial_weights.tolist(),
            )
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(
            b=int(d["b"]),
            seed=int(d["seed"]),
            times=np.asarray(d["times"], dtype=np.float64),
            nodes=np.asarray(d["nodes"], dtype=np.int64),
            ref=np.asarray(d["ref"], dtype=np.int64),
            move=np.asarray(d["move"], dtype=np.int64),
            levels=np.asarray(d["levels"], dtype=np.int64),
            local_times=np.asarray(d["local_times"], dtype=np.float64),
            initial_weights=np.asarray(d["initial_weights"], dtype=np.float64),
            end_time=float(d["end_time"]),
            stop_reason=str(d["stop_reason"]),
            origin=tuple(d.get("origin", ())),
        )

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        arrays = ("times", "nodes", "ref", "move", "levels", "local_times", "initial_weights")
        return (
            self.b == other.b
            and self.seed == other.seed
            and self.stop_reason == other.stop_reason
            and self.end_time == other.end_time
            and tuple(self.origin) == tuple(other.origin)
            and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
        )

    def __repr__(self):
        return (
            f"Trajectory(b={self.b}, seed={self.seed}, n_events={self.n_events}, "
            f"final_level={self.final_level}, end_time={self.end_time:.6g}, "
            f"stop_reason={self.stop_reason!r})"
        )
