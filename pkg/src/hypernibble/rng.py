"""Counter-based random streams.

Every random draw in the package comes from a Philox generator whose key is
derived from ``(seed, *labels)``.  Two streams with different labels are
independent, and a stream never depends on how many draws other streams made,
which keeps runs replayable and order-independent.
"""

import zlib

import numpy as np


def _word(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("stream labels must be non-negative")
        return int(label)
    return zlib.crc32(str(label).encode())


def stream(seed: int, *labels) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an arbitrary label path."""
    ss = np.random.SeedSequence([_word(seed)] + [_word(x) for x in labels])
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *labels) -> int:
    """Derive a 63-bit integer seed for a sub-computation."""
    ss = np.random.SeedSequence([_word(seed)] + [_word(x) for x in labels])
    return int(ss.generate_state(1, dtype=np.uint64)[0]) & ((1 << 63) - 1)
