"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, *keys)``. Chains, batches
and replicas each get their own key, so results never depend on how work is
scheduled across workers.
"""

import zlib
from typing import Union

import numpy as np

SEED_MAX = 2**64 - 1

Key = Union[int, str]


def _key_word(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"stream keys must be nonnegative, got {key}")
    return int(key)


def stream(seed: int, *keys: Key) -> np.random.Generator:
    """Return the generator for ``seed`` and the key path ``keys``.

    String keys are tags (``"chain"``, ``"bootstrap"``); integer keys are indices.
    """
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be a u64, got {seed}")
    seq = np.random.SeedSequence(seed, spawn_key=tuple(_key_word(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def child_seed(seed: int, *keys: Key) -> int:
    """Derive a u64 seed for a sub-computation that takes a plain seed."""
    seq = np.random.SeedSequence(seed, spawn_key=tuple(_key_word(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
