"""Named, splittable random-number streams.

Every consumer of randomness derives its own sub-stream from a 64-bit seed
plus an integer key path, so adding users, trials, or cases never perturbs
the draws of existing streams.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# Key-path roots for the sub-stream namespaces used across the package.
STREAM_CHANNEL = 0
STREAM_INIT = 1


def substream(seed, *key):
    """Generator for the sub-stream identified by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
