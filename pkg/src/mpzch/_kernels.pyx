# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled probing kernels. Same call surface as ``_kernels_py``."""
from libc.stdint cimport int8_t, int64_t, uint64_t

cdef enum:
    FOUND = 0
    INSERTED = 1
    EVICTED = 2
    COLLISION = 3
    MODE_TTL = 1
    MODE_LRU = 2

cdef uint64_t HOME_SALT = 0x9E3779B97F4A7C15ULL
cdef int64_t EMPTY = -1

BACKEND = "cython"


cdef inline uint64_t _mix(uint64_t x) noexcept nogil:
    x ^= x >> 33
    x *= 0xFF51AFD7ED558CCDULL
    x ^= x >> 33
    x *= 0xC4CEB9FE1A85EC53ULL
    x ^= x >> 33
    return x


cdef inline Py_ssize_t _home(int64_t ident, uint64_t seed, Py_ssize_t cap) noexcept nogil:
    return <Py_ssize_t>(_mix((<uint64_t>ident) ^ HOME_SALT ^ seed) % <uint64_t>cap)


cdef inline void _probe_one(int64_t ident, uint64_t m, uint64_t now,
                            int64_t[::1] idents, uint64_t[::1] meta,
                            uint64_t seed, Py_ssize_t probe, int mode,
                            int64_t* out_slot, int8_t* out_outcome) noexcept nogil:
    cdef Py_ssize_t cap = idents.shape[0]
    cdef Py_ssize_t home = _home(ident, seed, cap)
    cdef Py_ssize_t slot = home
    cdef Py_ssize_t i, best
    cdef bint exists = False
    cdef int64_t cur
    cdef uint64_t best_ts

    for i in range(probe):
        if idents[slot] == ident:
            exists = True
            break
        slot += 1
        if slot == cap:
            slot = 0

    slot = home
    for i in range(probe):
        cur = idents[slot]
        if cur == ident or cur == EMPTY:
            idents[slot] = ident
            meta[slot] = m
            out_slot[0] = slot
            out_outcome[0] = FOUND if cur == ident else INSERTED
            return
        if not exists and mode == MODE_TTL and meta[slot] < now:
            idents[slot] = ident
            meta[slot] = m
            out_slot[0] = slot
            out_outcome[0] = EVICTED
            return
        slot += 1
        if slot == cap:
            slot = 0

    if mode == MODE_LRU and not exists:
        best = home
        best_ts = meta[home]
        slot = home
        for i in range(1, probe):
            slot += 1
            if slot == cap:
                slot = 0
            if meta[slot] < best_ts:
                best = slot
                best_ts = meta[slot]
        idents[best] = ident
        meta[best] = m
        out_slot[0] = best
        out_outcome[0] = EVICTED
        return

    meta[home] = m
    out_slot[0] = home
    out_outcome[0] = COLLISION


def probe_run(const int64_t[::1] ids, const uint64_t[::1] metas, uint64_t now,
              int64_t[::1] identities, uint64_t[::1] metadata,
              uint64_t seed, Py_ssize_t max_probe, int mode,
              int64_t[::1] out_slots, int8_t[::1] out_outcomes):
    cdef Py_ssize_t k, n = ids.shape[0]
    with nogil:
        for k in range(n):
            _probe_one(ids[k], metas[k], now, identities, metadata, seed, max_probe,
                       mode, &out_slots[k], &out_outcomes[k])


def readonly_run(const int64_t[::1] ids, const int64_t[::1] identities,
                 uint64_t seed, Py_ssize_t max_probe,
                 int64_t[::1] out_slots, int8_t[::1] out_outcomes):
    cdef Py_ssize_t k, i, slot, home, n = ids.shape[0]
    cdef Py_ssize_t cap = identities.shape[0]
    cdef int64_t ident
    with nogil:
        for k in range(n):
            ident = ids[k]
            home = _home(ident, seed, cap)
            out_slots[k] = home
            out_outcomes[k] = COLLISION
            slot = home
            for i in range(max_probe):
                if identities[slot] == ident:
                    out_slots[k] = slot
                    out_outcomes[k] = FOUND
                    break
                slot += 1
                if slot == cap:
                    slot = 0
