"""Deterministic RNG derivation.

Every stochastic step in the toolkit draws from a generator derived from
(root seed, purpose tag, context ids).  Streams are therefore independent
of execution order and thread/worker count: the same inputs always produce
bit-identical results.
"""

from __future__ import annotations

import numpy as np

# Purpose tags keep unrelated streams from colliding.
PLACEMENT = 1
MEASUREMENT = 2
BELIEF_INIT = 3
MESSAGE = 4
FUSION = 5
EXPERIMENT = 6


def derive_rng(seed: int, *tags: int) -> np.random.Generator:
    """Generator for stream (seed, *tags). All values must be non-negative."""
    if seed < 0 or any(t < 0 for t in tags):
        raise ValueError("seed and tags must be non-negative")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))
