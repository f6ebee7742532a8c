"""Seeded, splittable random streams.

A stream is identified by an integer seed plus a tuple of non-negative integer
keys.  The keys become the ``spawn_key`` of a :class:`numpy.random.SeedSequence`,
so ``stream(seed, b)`` is exactly the generator numpy's ``SeedSequence.spawn``
would hand to child ``b``.  Streams never depend on how many workers run or in
which order they are consumed.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "PCG64"

# fixed sub-stream tags
DATA = 0
BOOT = 1
CHISQ = 2
SIGNS = 3


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the generator for ``(seed, *keys)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def describe(seed: int) -> str:
    """Metadata fragment recorded next to every seeded output."""
    return f"rng={GENERATOR_NAME} seed_sequence=numpy seed={int(seed)}"
