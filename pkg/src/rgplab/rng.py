"""Counter-based random substreams.

Every draw in the package comes from a generator derived from a master seed and
a tuple of keys naming the purpose (module, trial, timestamp, ...). String keys
are mapped through CRC32 so derivations are stable across interpreter runs and
independent of worker count or call order.
"""

import zlib

import numpy as np


def _key(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    k = int(k)
    if k < 0:
        raise ValueError(f"rng keys must be non-negative, got {k}")
    return k


def derive_rng(seed, *keys) -> np.random.Generator:
    """Generator for the substream ``(seed, *keys)``."""
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *keys) -> int:
    """A 63-bit integer seed for the substream ``(seed, *keys)``."""
    return int(derive_rng(seed, *keys).integers(0, 2**63 - 1))
