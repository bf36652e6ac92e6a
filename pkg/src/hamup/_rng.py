"""Seeded, splittable random streams.

Every random draw in the package comes from a Philox (counter-based) generator
keyed by ``(seed, *labels)``.  Labels are hashed to stable 32-bit words, so a
stream depends only on the seed and its label path, never on the order in which
other streams were consumed.  Stream layout used by the package:

=====================================  ===========================================
labels                                 purpose
=====================================  ===========================================
``("target",)``                        synthetic target state of a run
``("basis", k)``                       k-th fresh measurement basis of a run
``("shots", k)``                       multinomial sampling for basis k
``("white", k)``                       additive distribution noise for basis k
``("krylov", attempt)``                Gaussian start block of block Krylov
``("repetition", r)``                  per-repetition seed of an experiment
=====================================  ===========================================
"""

from __future__ import annotations

import zlib

import numpy as np

SeedLike = "int | np.random.Generator | None"


def _word(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode("utf-8"))


def stream(seed: int, *labels) -> np.random.Generator:
    """Return the generator for ``seed`` and the given label path."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=tuple(_word(x) for x in labels))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed, an existing generator, or None (fresh entropy)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.Generator(np.random.Philox())
    return stream(int(seed))


def derive_seed(seed: int, *labels) -> int:
    """A 63-bit integer seed for a child computation."""
    return int(stream(seed, *labels).integers(0, 2**63 - 1))
