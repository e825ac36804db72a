"""Seeded, splittable random streams.

Every stochastic operation names its stream, e.g. ``make_rng(seed, "split")``
or ``make_rng(seed, "train", iteration)``, so adding a new consumer never
shifts the numbers another consumer sees.
"""

import zlib

import numpy as np


def _key(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def make_rng(seed, *stream):
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key(p) for p in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
