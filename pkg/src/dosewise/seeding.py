"""Counter-based seed derivation for parallel replications.

Replication ``r`` of a batch gets ``mix64(master_seed + (r + 1) * GOLDEN)``,
the splitmix64 scheme: the state jumps by a fixed odd constant per counter
step and a finalizer scrambles it.  Seeds depend only on (master_seed, r),
never on execution order, so any worker can produce any replication and the
stream assignment is identical across machines and thread counts.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def replication_seed(master_seed: int, replication: int) -> int:
    """64-bit seed for one replication, derived without touching any other
    replication's stream."""
    if replication < 0:
        raise ValueError(f"replication index must be >= 0, got {replication}")
    return mix64((master_seed + (replication + 1) * GOLDEN) & MASK64)


def trial_rng(seed: int) -> np.random.Generator:
    """Generator backed by the counter-based Philox bit generator."""
    return np.random.Generator(np.random.Philox(key=seed))
