import secrets

import numpy as np


def derive_seed(master_seed: int, *path: int) -> int:
    """
    Derive an independent child seed from a master seed and a stream path.

    The same (master_seed, path) always yields the same seed, so per-trial and
    per-noise-source streams do not depend on scheduling order.

    Args:
        master_seed: Seed supplied by the caller.
        *path: Integers identifying the stream (noise source, cell, trial...).

    Returns:
        A 63-bit non-negative integer seed.
    """
    sequence = np.random.SeedSequence([int(master_seed), *map(int, path)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def fresh_seed() -> int:
    return secrets.randbits(32)
