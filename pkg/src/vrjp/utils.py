"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numbers
from hashlib import blake2b

import numpy as np

from .exceptions import MalformedConfigError

__all__ = [
    "check_branching",
    "check_probability_vector",
    "check_seed",
    "check_positive_int",
    "derive_seed",
]

_SEED_MASK = (1 << 64) - 1


def check_branching(b, *, minimum=1, name="b"):
    """Return ``b`` as a python int after checking ``b >= minimum``."""
    if isinstance(b, bool) or not isinstance(b, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(b).__name__}")
    b = int(b)
    if b < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {b}")
    return b


def check_positive_int(value, name, *, allow_zero=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'>= 0' if allow_zero else '> 0'}, got {value}")
    return value


def check_seed(seed):
    """Seeds are mandatory 64-bit integers; there is no wall-clock fallback."""
    if seed is None:
        raise MalformedConfigError("a seed is required; wall-clock seeding is not supported")
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise MalformedConfigError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed <= _SEED_MASK:
        raise MalformedConfigError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def derive_seed(master, index):
    """Deterministic child seed for replica/run ``index`` of a campaign."""
    h = blake2b(digest_size=8, person=b"vrjp-derive")
    h.update(int(master).to_bytes(8, "little"))
    h.update(int(index).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def check_probability_vector(probs, *, atol=1e-10, name="probs"):
    """Validate a finite probability vector and return it as float64 array."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative entries: {arr[arr < 0]}")
    total = float(np.sum(arr))
    if abs(total - 1.0) > atol:
        raise ValueError(f"{name} sums to {total!r}, not 1 within {atol}")
    return arr
