"""Keyed exponential clocks for the ordered edges of the b-ary tree.

Every ordered pair of neighbours ``(u, v)`` owns a rate-1 Poisson process.
Its ``i``-th inter-arrival time is a pure function of the master seed, the
vertex ``u``, the direction towards ``v`` and ``i``: a keyed BLAKE2b digest
turned into an exponential variate by inverse CDF. Nothing is pre-generated,
so the infinite tree is explored lazily and any run replays exactly.

Vertex keys are built as a hash chain along the path from the root, so a
vertex at depth ``n`` costs one hash once its parent key is known. The first
inter-arrivals of all edges leaving a vertex come from one wide digest
(parent in block 0, child ``c`` in block ``c + 1``, eight blocks per
digest), since a fresh vertex always needs all of them at once.
"""

from __future__ import annotations

import math
import struct
from hashlib import blake2b

from ..utils import check_seed

__all__ = ["PARENT", "KeyedClock", "ConstantClock", "interarrival", "direction"]

PARENT = 0xFFFFFFFF
_TWO_M53 = 2.0**-53
_DRAW = struct.Struct("<IQ")
_CHILD = struct.Struct("<I")
_FIRST = struct.Struct("<8Q")
_FIRST_TAG = b"first"


def _to_exp(x):
    return -math.log(((x >> 11) + 0.5) * _TWO_M53)


def _block(d):
    return 0 if d == PARENT else d + 1


class KeyedClock:
    """Counter-based source of the inter-arrival times ``h_i(u, v)``."""

    def __init__(self, seed):
        self.seed = check_seed(seed)
        self.root_key = blake2b(
            self.seed.to_bytes(8, "little"), digest_size=16, person=b"vrjp-root"
        ).digest()

    def child_key(self, key, c):
        return blake2b(key + _CHILD.pack(c), digest_size=16).digest()

    def key(self, path):
        k = self.root_key
        for c in path:
            k = self.child_key(k, c)
        return k

    def draw(self, key, d, i):
        """Inter-arrival ``i >= 1`` from the vertex with ``key`` in direction ``d``."""
        if i == 1:
            blk = _block(d)
            return self._first_page(key, blk >> 3)[blk & 7]
        x = int.from_bytes(blake2b(key + _DRAW.pack(d, i), digest_size=8).digest(), "little")
        return _to_exp(x)

    def _first_page(self, key, page):
        words = _FIRST.unpack(blake2b(key + _FIRST_TAG + _CHILD.pack(page), digest_size=64).digest())
        return [_to_exp(x) for x in words]

    def first_draws(self, key, children):
        """``h_1`` towards the parent and towards each child index in ``children``.

        Returns ``(parent_value, {c: value})``; agrees with :meth:`draw` at ``i = 1``.
        """
        pages = {}
        out = {}
        for c in children:
            blk = c + 1
            pg = pages.get(blk >> 3)
            if pg is None:
                pg = pages[blk >> 3] = self._first_page(key, blk >> 3)
            out[c] = pg[blk & 7]
        pg = pages.get(0)
        if pg is None:
            pg = self._first_page(key, 0)
        return pg[0], out

    def h(self, frm, to, i):
        return self.draw(self.key(tuple(frm)), direction(frm, to), i)

    def __repr__(self):
        return f"{type(self).__name__}(seed={self.seed})"


class ConstantClock(KeyedClock):
    """Every inter-arrival equals ``value``; used to probe tie handling."""

    def __init__(self, value=1.0, seed=0):
        super().__init__(seed)
        self.value = float(value)

    def draw(self, key, d, i):
        return self.value

    def first_draws(self, key, children):
        return self.value, {c: self.value for c in children}


def direction(frm, to):
    """Direction code of the step ``frm -> to``: child index, or ``PARENT``."""
    frm = tuple(frm)
    to = tuple(to)
    if len(to) == len(frm) + 1 and to[:-1] == frm:
        return to[-1]
    if len(frm) == len(to) + 1 and frm[:-1] == to:
        return PARENT
    raise ValueError(f"{frm} and {to} are not neighbours")


def interarrival(seed, frm, to, i):
    """``h_i(frm, to)``: the ``i``-th inter-arrival of the clock on ``frm -> to``."""
    if i < 1:
        raise ValueError("inter-arrival index starts at 1")
    return KeyedClock(seed).h(frm, to, i)
