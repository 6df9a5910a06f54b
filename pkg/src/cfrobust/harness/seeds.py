"""Named random streams derived from one master seed.

Each purpose (``"split"``, ``"attack"``, ...) gets its own stream keyed by
name rather than by call order, so adding a new consumer leaves the others
untouched.
"""
from __future__ import annotations

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def derive_seed(master: int, *path) -> int:
    """A 63-bit seed determined by ``master`` and the stream ``path``."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_key(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def rng_for(master: int, *path) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *path))
