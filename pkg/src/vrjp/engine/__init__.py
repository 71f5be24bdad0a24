"""VRJP simulation by the Poisson construction on a lazily grown tree."""

from .clocks import PARENT, ConstantClock, KeyedClock, direction, interarrival
from .gillespie import gillespie_run
from .local_times import ray_root_local_time, two_vertex_local_time, two_vertex_samples
from .simulator import RunConfig, Walker, extension_run, run
from .trajectory import STOP_REASONS, Trajectory

__all__ = [
    "PARENT",
    "STOP_REASONS",
    "ConstantClock",
    "KeyedClock",
    "RunConfig",
    "Trajectory",
    "Walker",
    "direction",
    "extension_run",
    "gillespie_run",
    "interarrival",
    "ray_root_local_time",
    "run",
    "two_vertex_local_time",
    "two_vertex_samples",
]
