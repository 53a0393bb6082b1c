"""Seeded random streams.

All randomness comes from PCG64 generators keyed by ``(root_seed, *path)``
through :class:`numpy.random.SeedSequence` spawn keys. The first element of
``path`` is a :class:`Stream` tag naming what the stream is for, the rest are
indices (cell, distance, repeat, batch, ...). Two call sites that use the same
key get the same stream on every platform numpy supports.
"""
from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    SHOTS = 1
    EXPECTED = 2
    NOISE = 3
    SITE_FIELD = 4
    CELL = 5
    DISTANCE = 6
    BATCH = 7
    PLACEMENT = 8
    RANDOM_TEST = 99


def seed_sequence(seed, *path: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        key = tuple(seed.spawn_key) + tuple(int(p) for p in path)
        return np.random.SeedSequence(seed.entropy, spawn_key=key)
    if seed is None:
        raise ValueError("a seed is required; wall-clock seeding is not supported")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))


def stream(seed, *path: int) -> np.random.Generator:
    """Generator for ``seed`` extended by ``path``.

    ``seed`` may be an int, a SeedSequence or an existing Generator (returned
    as is when no path is given).
    """
    if isinstance(seed, np.random.Generator):
        if path:
            raise TypeError("cannot derive a keyed child stream from a Generator")
        return seed
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))
