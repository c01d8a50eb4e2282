"""Seeded random number generation.

All randomness in the workbench flows from numpy's ``PCG64`` bit generator
seeded through :func:`make_rng`. Independent streams of one run are derived
by appending a stream tag to the seed sequence, so adding a new consumer
never shifts the draws of an existing one.
"""

import numpy as np

# Stream tags for make_rng(seed, stream)
STREAM_INIT = 0
STREAM_DROPOUT = 1
STREAM_SHUFFLE = 2
STREAM_NOISE = 3


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a PCG64 generator for ``seed`` and an optional stream path."""
    if stream:
        return np.random.Generator(np.random.PCG64([seed, *stream]))
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(seed: int, index: int) -> int:
    """Per-item seed for batch generation: ``seed + index``."""
    return seed + index
