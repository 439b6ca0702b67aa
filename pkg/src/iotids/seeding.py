"""Deterministic RNG stream derivation.

Every randomized component draws from its own stream keyed by (seed, tags...),
so results are bit-identical regardless of evaluation order or worker count.
"""

import numpy as np

# Stream tags: components never share a stream even under one master seed.
TREE_STREAM = 0
BOOST_STREAM = 1
SPLIT_STREAM = 2
FOLD_STREAM = 3


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for stream `key` of `seed`. Equal (seed, key) gives equal streams."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)
