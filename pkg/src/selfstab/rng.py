"""Seeded random streams.

Every random draw in the package goes through :func:`substream`, which keys a
counter-based Philox4x64-10 generator by ``(seed, *keys)`` through numpy's
``SeedSequence`` spawn-key mechanism. A given key tuple always yields the same
stream, on any platform, independently of how many other streams exist.
"""

import numpy as np

PRNG_NAME = "numpy.random.Philox (4x64-10) keyed by SeedSequence(seed, spawn_key)"

SEED_MASK = (1 << 64) - 1


def _seed_sequence(seed, keys):
    return np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=tuple(int(k) for k in keys))


def substream(seed, *keys):
    """Return the generator for substream ``keys`` of ``seed``."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, keys)))


def derive_seed(seed, *keys):
    """Derive a fresh 64-bit integer seed, e.g. one per path of a batch."""
    return int(_seed_sequence(seed, keys).generate_state(1, np.uint64)[0])
