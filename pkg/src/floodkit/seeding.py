"""Deterministic RNG fan-out.

Every stochastic component takes a 64-bit seed and derives independent
substreams with spawn_rng(seed, *stream).  Identical (seed, stream)
always yields an identical generator, so parallel and sequential
execution produce the same results.
"""

import numpy as np


def spawn_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the given root seed and substream path."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(int(s) & 0xFFFFFFFFFFFFFFFF for s in stream)
    return np.random.default_rng(np.random.SeedSequence(entropy))
