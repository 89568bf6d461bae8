"""Multi-probe zero-collision hashing (MPZCH) for embedding tables.

Linear probing over per-shard identity and metadata arrays, with TTL or LRU
lazy eviction, sharded batching, embedding resets on eviction, and
snapshot/delta publishing for read-only replicas.
"""
from ._backend import BACKEND
from .baseline import BaselineConfig, baseline_assign
from .batch import BatchOutput, FrozenTableError, IdBatch, ShardedTable, dedup, process_batch
from .embedding_store import EmbeddingTable, RowInit
from .eviction import EvictionPolicy, LruPolicy, Mode, TtlPolicy, is_expired, make_metadata, select_victim_lru
from .hashing import EMPTY, mix64
from .probe_core import Outcome, ProbeResult, Shard, ShardConfig, home_slot, lookup_or_insert, lookup_readonly
from .publish import DeltaPublisher, apply_delta, read_snapshot, write_snapshot
from .shard_router import TableLayout, from_global, shard_of, to_global

__version__ = "0.1.0"
