"""Counter-based random streams.

Every stream is a Philox generator keyed directly by a 64-bit seed; parallel
tasks use ``seed ^ task_index`` so that each task owns a disjoint stream.
"""

import numpy as np

MASK64 = (1 << 64) - 1


def make_rng(seed: int = 0, stream: int = 0) -> np.random.Generator:
    key = (int(seed) ^ int(stream)) & MASK64
    return np.random.Generator(np.random.Philox(key=key))
