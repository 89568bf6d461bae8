"""Batched execution over a sharded MPZCH table.

A batch is deduplicated, routed to shards, and each shard processes its
unique IDs in first-occurrence order. Shards run in parallel; the result is
identical to running every shard one after another.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .embedding_store import EmbeddingTable, RowGenerations, RowInit
from .eviction import EvictionPolicy, Mode, U64_MAX
from .hashing import EMPTY
from .probe_core import Outcome, ProbeResult, Shard, ShardConfig, lookup_readonly, probe_many
from .shard_router import TableLayout, shard_of_array


def worker_count(tasks: int) -> int:
    cap = os.environ.get("ZCH_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(tasks, limit))


@dataclass
class IdBatch:
    ids: np.ndarray
    features: np.ndarray
    now: int = 0

    def __init__(self, ids, features=None, now: int = 0):
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        if features is None:
            features = np.zeros(ids.shape, dtype=np.int64)
        features = np.asarray(features, dtype=np.int64).reshape(-1)
        if features.shape != ids.shape:
            raise ValueError("ids and features must have the same length")
        bad = np.flatnonzero(ids < 0)
        if bad.size:
            raise ValueError(f"batch position {int(bad[0])}: invalid ID {int(ids[bad[0]])} (EMPTY or negative)")
        if not 0 <= now <= U64_MAX:
            raise ValueError(f"timestamp {now} outside the unsigned 64-bit range")
        self.ids, self.features, self.now = ids, features, int(now)

    @classmethod
    def from_pairs(cls, pairs, now: int = 0) -> "IdBatch":
        pairs = list(pairs)
        if not pairs:
            return cls([], [], now)
        ids, feats = zip(*pairs)
        return cls(ids, feats, now)

    def __len__(self):
        return self.ids.size


@dataclass
class DedupResult:
    ids: np.ndarray
    features: np.ndarray
    inverse: np.ndarray

    @property
    def uniques(self) -> list[tuple[int, int]]:
        return list(zip(self.ids.tolist(), self.features.tolist()))


def dedup(batch: IdBatch) -> DedupResult:
    """Distinct (id, feature) pairs in first-occurrence order plus the inverse map."""
    n = len(batch)
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return DedupResult(empty, empty.copy(), empty.copy())
    # stable sort keeps each group's first occurrence at the group head
    order = np.lexsort((batch.features, batch.ids))
    ids_s, feats_s = batch.ids[order], batch.features[order]
    head = np.ones(n, dtype=bool)
    head[1:] = (ids_s[1:] != ids_s[:-1]) | (feats_s[1:] != feats_s[:-1])
    group = np.cumsum(head) - 1
    firsts_sorted = order[head]
    rank_order = np.argsort(firsts_sorted, kind="stable")
    rank = np.empty_like(rank_order)
    rank[rank_order] = np.arange(rank_order.size)
    inverse = np.empty(n, dtype=np.int64)
    inverse[order] = rank[group]
    firsts = firsts_sorted[rank_order]
    return DedupResult(batch.ids[firsts], batch.features[firsts], inverse)


@dataclass
class BatchOutput:
    rows: np.ndarray
    outcomes: np.ndarray
    unique_rows: np.ndarray = field(repr=False)
    unique_outcomes: np.ndarray = field(repr=False)

    @property
    def evicted(self) -> np.ndarray:
        return self.outcomes == Outcome.EVICTED

    def __len__(self):
        return self.rows.size

    def __getitem__(self, i) -> ProbeResult:
        outcome = Outcome(int(self.outcomes[i]))
        return ProbeResult(int(self.rows[i]), outcome == Outcome.EVICTED, outcome)

    def counts(self) -> dict[str, int]:
        """Outcome tallies over the unique IDs of the batch."""
        tallies = np.bincount(self.unique_outcomes.astype(np.int64), minlength=len(Outcome))
        return {o.name.lower(): int(tallies[o]) for o in Outcome}


def batch_metadata(policy: EvictionPolicy, now: int, features: np.ndarray) -> np.ndarray:
    if policy.mode != Mode.TTL:
        return np.full(features.size, now, dtype=np.uint64)
    ttl = policy.ttl
    feats, inv = np.unique(features, return_inverse=True)
    expiries = []
    for f in feats.tolist():
        expiry = now + ttl.ttl_for(f)
        if expiry > U64_MAX:
            raise OverflowError(f"expiry for feature {f} at now={now} overflows 64 bits")
        expiries.append(expiry)
    return np.asarray(expiries, dtype=np.uint64)[inv.reshape(-1)]


class FrozenTableError(RuntimeError):
    """Raised when a read-only (published) table is asked to mutate."""


class ShardedTable:
    """Row-wise sharded MPZCH table, optionally carrying embedding rows.

    Each shard's window is capped at its own capacity.
    """

    def __init__(self, layout: TableLayout, max_probe: int,
                 policy: EvictionPolicy | None = None,
                 dim: int | None = None, init_seed: int = 0):
        if max_probe < 1:
            raise ValueError("max_probe must be at least 1")
        self.layout = layout
        self.max_probe = max_probe
        self.policy = policy or EvictionPolicy.disabled()
        self.shards = [
            Shard(ShardConfig(cap, min(max_probe, cap), s, layout.seed))
            for s, cap in enumerate(layout.shard_capacities)
        ]
        self._offsets = np.asarray(layout.shard_offsets, dtype=np.int64)
        self.generations = RowGenerations(layout.total_rows)
        self.embeddings = (
            EmbeddingTable(layout.total_rows, dim, RowInit(init_seed), self.generations)
            if dim is not None else None
        )

    @property
    def total_rows(self) -> int:
        return self.layout.total_rows

    def identities(self) -> np.ndarray:
        return np.concatenate([s.identities for s in self.shards])

    def metadata(self) -> np.ndarray:
        return np.concatenate([s.metadata for s in self.shards])

    def lookup(self, ident: int) -> ProbeResult:
        shard = int(shard_of_array(np.array([ident]), self.layout)[0])
        res = lookup_readonly(ident, self.shards[shard].identities, self.shards[shard].cfg)
        return ProbeResult(int(self._offsets[shard]) + res.slot, res.evicted, res.outcome)

    def process_batch(self, batch: IdBatch, policy: EvictionPolicy | None = None,
                      parallel: bool = True) -> BatchOutput:
        policy = policy or self.policy
        d = dedup(batch)
        metas = batch_metadata(policy, batch.now, d.features)
        shard_idx = shard_of_array(d.ids, self.layout)
        local = np.empty(d.ids.size, dtype=np.int64)
        codes = np.empty(d.ids.size, dtype=np.int8)

        tasks = []
        for s in range(self.layout.num_shards):
            pos = np.flatnonzero(shard_idx == s)
            if pos.size:
                tasks.append((s, pos))

        def run(task):
            s, pos = task
            shard = self.shards[s]
            slots, outs = probe_many(d.ids[pos], metas[pos], batch.now,
                                     shard.identities, shard.metadata, shard.cfg, policy)
            local[pos] = slots
            codes[pos] = outs

        workers = worker_count(len(tasks)) if parallel else 1
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, tasks))
        else:
            for task in tasks:
                run(task)

        rows = self._offsets[shard_idx] + local if d.ids.size else local
        changed = rows[(codes == Outcome.INSERTED) | (codes == Outcome.EVICTED)]
        self.generations.touch(changed)
        if self.embeddings is not None:
            self.embeddings.reset_rows(rows[codes == Outcome.EVICTED])
        return BatchOutput(rows[d.inverse], codes[d.inverse], rows, codes)

    def occupied(self) -> int:
        return sum(s.occupied() for s in self.shards)


def process_batch(table, batch: IdBatch, policy: EvictionPolicy | None = None,
                  parallel: bool = True) -> BatchOutput:
    if not isinstance(table, ShardedTable):
        raise FrozenTableError(f"{type(table).__name__} does not accept mutating batches")
    return table.process_batch(batch, policy, parallel)


__all__ = [
    "BatchOutput", "DedupResult", "FrozenTableError", "IdBatch", "ShardedTable",
    "dedup", "process_batch", "worker_count", "EMPTY",
]
