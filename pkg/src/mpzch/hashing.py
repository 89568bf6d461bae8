"""64-bit avalanche mixer shared by slot placement, shard routing and the baseline."""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
ID_LIMIT = 1 << 63

# Raw all-ones pattern; identities are stored as int64 so this reads back as -1.
EMPTY = -1
EMPTY_U64 = MASK64

HOME_SALT = 0x9E3779B97F4A7C15
SHARD_SALT = 0xD1B54A32D192ED03

_M1 = 0xFF51AFD7ED558CCD
_M2 = 0xC4CEB9FE1A85EC53


def mix64(value: int, seed: int = 0) -> int:
    x = (value ^ seed) & MASK64
    x ^= x >> 33
    x = (x * _M1) & MASK64
    x ^= x >> 33
    x = (x * _M2) & MASK64
    x ^= x >> 33
    return x


def mix64_array(values, seed: int = 0) -> np.ndarray:
    """Vectorized :func:`mix64`. Accepts any integer array; returns uint64."""
    x = np.asarray(values).astype(np.uint64, copy=True)
    x ^= np.uint64(seed & MASK64)
    x ^= x >> np.uint64(33)
    x *= np.uint64(_M1)
    x ^= x >> np.uint64(33)
    x *= np.uint64(_M2)
    x ^= x >> np.uint64(33)
    return x


def check_id(ident: int) -> int:
    ident = int(ident)
    if ident == EMPTY or ident == EMPTY_U64:
        raise ValueError("the EMPTY sentinel cannot be used as an ID")
    if not 0 <= ident < ID_LIMIT:
        raise ValueError(f"IDs must be non-negative 63-bit integers, got {ident}")
    return ident


def check_ids(ids: np.ndarray) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and ids.min() < 0:
        bad = int(np.flatnonzero(ids < 0)[0])
        raise ValueError(f"invalid ID {int(ids[bad])} at position {bad} (EMPTY or negative)")
    return ids
