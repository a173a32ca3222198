"""Counter-based random streams keyed by (seed, trial)."""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def rng_substream(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Philox-4x64 generator whose key is (seed, trial).

    Each stream has period 2^256. ``stream`` selects an independent counter
    block so one trial can feed several consumers without overlap.
    """
    key = np.array([int(seed) & _MASK, int(trial) & _MASK], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(stream) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
