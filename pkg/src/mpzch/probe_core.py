"""A single MPZCH shard: identity/metadata arrays and two-pass probing.

Mutating calls on one shard must be serialized by the caller. Read-only
lookups may run concurrently with each other.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _backend
from .eviction import EvictionPolicy, check_metadata, make_metadata
from .hashing import EMPTY, HOME_SALT, check_id, mix64


class Outcome(enum.IntEnum):
    FOUND = 0
    INSERTED = 1
    EVICTED = 2
    COLLISION = 3


@dataclass(frozen=True)
class ShardConfig:
    capacity: int
    max_probe: int
    shard_id: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be at least 1")
        if not 1 <= self.max_probe <= self.capacity:
            raise ValueError(f"max_probe must be in [1, capacity={self.capacity}], got {self.max_probe}")
        if self.shard_id < 0:
            raise ValueError("shard_id must be non-negative")


@dataclass(frozen=True)
class ProbeResult:
    slot: int
    evicted: bool
    outcome: Outcome


def home_slot(ident: int, cfg: ShardConfig) -> int:
    return mix64(check_id(ident) ^ HOME_SALT, cfg.seed) % cfg.capacity


def new_identities(capacity: int) -> np.ndarray:
    return np.full(capacity, EMPTY, dtype=np.int64)


def new_metadata(capacity: int) -> np.ndarray:
    return np.zeros(capacity, dtype=np.uint64)


def _result(slot, code) -> ProbeResult:
    outcome = Outcome(int(code))
    return ProbeResult(int(slot), outcome == Outcome.EVICTED, outcome)


def lookup_readonly(ident: int, identities: np.ndarray, cfg: ShardConfig) -> ProbeResult:
    """Find ``ident`` in its probe window without writing anything.

    Falls back to the home slot with outcome COLLISION when absent.
    """
    ids = np.array([check_id(ident)], dtype=np.int64)
    slots = np.empty(1, dtype=np.int64)
    codes = np.empty(1, dtype=np.int8)
    _backend.kernels.readonly_run(ids, identities, cfg.seed, cfg.max_probe, slots, codes)
    return _result(slots[0], codes[0])


def lookup_or_insert(
    ident: int,
    meta_in: int,
    now: int,
    identities: np.ndarray,
    metadata: np.ndarray,
    cfg: ShardConfig,
    policy: EvictionPolicy,
) -> ProbeResult:
    """Look up ``ident``, inserting it or evicting a victim if it is absent.

    Pass one only checks whether ``ident`` already sits in the window, so an
    existing entry always wins over an earlier expired slot. Pass two then
    refreshes, inserts, or evicts. A full window with no victim falls back to
    the home slot and overwrites its metadata.
    """
    check_id(ident)
    check_metadata(policy, meta_in, now)
    slots, codes = probe_many(
        np.array([ident], dtype=np.int64),
        np.array([meta_in], dtype=np.uint64),
        now, identities, metadata, cfg, policy,
    )
    return _result(slots[0], codes[0])


def probe_many(ids, metas, now, identities, metadata, cfg: ShardConfig, policy: EvictionPolicy):
    """Sequential lookup_or_insert over ``ids`` in order; returns (slots, outcome codes).

    No argument validation; callers check IDs and metadata first.
    """
    if identities.shape != (cfg.capacity,) or metadata.shape != (cfg.capacity,):
        raise ValueError("identity/metadata arrays do not match the shard capacity")
    n = len(ids)
    slots = np.empty(n, dtype=np.int64)
    codes = np.empty(n, dtype=np.int8)
    _backend.kernels.probe_run(
        np.ascontiguousarray(ids, dtype=np.int64),
        np.ascontiguousarray(metas, dtype=np.uint64),
        int(now), identities, metadata, cfg.seed, cfg.max_probe, int(policy.mode), slots, codes,
    )
    return slots, codes


class Shard:
    """Shard state bundled with its config."""

    def __init__(self, cfg: ShardConfig):
        self.cfg = cfg
        self.identities = new_identities(cfg.capacity)
        self.metadata = new_metadata(cfg.capacity)

    def home_slot(self, ident: int) -> int:
        return home_slot(ident, self.cfg)

    def lookup(self, ident: int) -> ProbeResult:
        return lookup_readonly(ident, self.identities, self.cfg)

    def lookup_or_insert(self, ident: int, now: int, policy: EvictionPolicy, feature: int = 0) -> ProbeResult:
        meta = make_metadata(policy, now, feature)
        return lookup_or_insert(ident, meta, now, self.identities, self.metadata, self.cfg, policy)

    def occupied(self) -> int:
        return int(np.count_nonzero(self.identities != EMPTY))

    def __repr__(self):
        return f"Shard(id={self.cfg.shard_id}, capacity={self.cfg.capacity}, occupied={self.occupied()})"
