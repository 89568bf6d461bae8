"""Pure-Python probing kernels, used when the compiled extension is unavailable.

Each ID's probe window is handled with numpy fancy indexing; IDs within a
call are still processed strictly in order.
"""
from __future__ import annotations

import numpy as np

from .hashing import HOME_SALT, mix64_array

FOUND, INSERTED, EVICTED, COLLISION = 0, 1, 2, 3
MODE_TTL, MODE_LRU = 1, 2
EMPTY = -1

BACKEND = "python"


def home_slots(ids: np.ndarray, seed: int, capacity: int) -> np.ndarray:
    h = mix64_array(np.asarray(ids, dtype=np.int64).view(np.uint64) ^ np.uint64(HOME_SALT), seed)
    return (h % np.uint64(capacity)).astype(np.int64)


def probe_run(ids, metas, now, identities, metadata, seed, max_probe, mode, out_slots, out_outcomes):
    cap = identities.shape[0]
    homes = home_slots(ids, seed, cap)
    offsets = np.arange(max_probe, dtype=np.int64)
    now = np.uint64(now)
    for k in range(len(ids)):
        ident = int(ids[k])
        m = metas[k]
        home = int(homes[k])
        window = (home + offsets) % cap
        occupants = identities[window]
        exists = bool((occupants == ident).any())

        # first slot that matches or is EMPTY, or, when absent, is TTL-expired
        hit = (occupants == ident) | (occupants == EMPTY)
        if not exists and mode == MODE_TTL:
            hit |= metadata[window] < now
        pos = int(np.argmax(hit)) if hit.any() else -1
        if pos >= 0:
            slot = int(window[pos])
            cur = int(occupants[pos])
            if cur == ident:
                outcome = FOUND
            elif cur == EMPTY:
                outcome = INSERTED
            else:
                outcome = EVICTED
            identities[slot] = ident
            metadata[slot] = m
        elif mode == MODE_LRU and not exists:
            slot = int(window[int(np.argmin(metadata[window]))])
            identities[slot] = ident
            metadata[slot] = m
            outcome = EVICTED
        else:
            slot = home
            metadata[home] = m
            outcome = COLLISION
        out_slots[k] = slot
        out_outcomes[k] = outcome


def readonly_run(ids, identities, seed, max_probe, out_slots, out_outcomes):
    cap = identities.shape[0]
    homes = home_slots(ids, seed, cap)
    offsets = np.arange(max_probe, dtype=np.int64)
    for k in range(len(ids)):
        home = int(homes[k])
        window = (home + offsets) % cap
        match = np.flatnonzero(identities[window] == ids[k])
        if match.size:
            out_slots[k] = window[match[0]]
            out_outcomes[k] = FOUND
        else:
            out_slots[k] = home
            out_outcomes[k] = COLLISION
