"""Seeded PCG64 streams.

Every sampling site draws from a child stream keyed by a fixed offset, so
adding a new site never perturbs the draws of an existing one.
"""

import numpy as np

# Stream offsets. Append new ones; never renumber.
STREAM_STRUCTURE = 0
STREAM_LINKS = 1
STREAM_FLOWS = 2
STREAM_BOTTLENECK = 3
STREAM_SIMULATION = 4
STREAM_PIPELINE = 5
STREAM_SPLIT = 6
STREAM_GENERALIZATION = 7


def child_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the child stream `stream` of `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=stream)))


def derive_seed(seed: int, *stream: int) -> int:
    """64-bit seed for the child stream `stream` of `seed`."""
    state = np.random.SeedSequence(seed, spawn_key=stream).generate_state(1, dtype=np.uint64)
    return int(state[0])
