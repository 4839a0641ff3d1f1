"""Deterministic derivation of every random stream from one run seed.

Each stochastic component (initialization, shuffling, candidate sampling,
logit noise, evaluation negatives) draws from its own child stream keyed by
a purpose code plus optional integer keys (epoch index, user index).  Two
runs with the same seed therefore agree stream-by-stream even when an
unrelated component changes how much randomness it consumes.
"""

from __future__ import annotations

import numpy as np

# Stable purpose codes.  Appending new ones is fine; renumbering breaks
# reproducibility of stored runs.
INIT = 1
SHUFFLE = 2
CANDIDATES = 3
NOISE = 4
EVAL_NEGATIVES = 5
DATA = 6

_MASK64 = (1 << 64) - 1


def stream(seed: int, purpose: int, *keys: int) -> np.random.Generator:
    """Return the generator for (seed, purpose, *keys).

    The same triple always yields the same stream regardless of creation
    order.  Negative seeds are folded into the unsigned 64-bit range.
    """
    entropy = (int(seed) & _MASK64, int(purpose)) + tuple(int(k) & _MASK64 for k in keys)
    return np.random.default_rng(np.random.SeedSequence(entropy))
