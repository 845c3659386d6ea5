"""Reproducible per-trial random streams.

Each trial draws from its own counter-based Philox stream keyed by
(master seed, trial index).  Streams are independent of execution order,
so trials can run serially or split across workers and produce identical
results.
"""

from __future__ import annotations

import numpy as np


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Return the generator for one trial of a run seeded with `seed`."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(trial)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
