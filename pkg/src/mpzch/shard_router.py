"""Row-wise sharding: ID-to-shard routing and local/global row arithmetic."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hashing import SHARD_SALT, check_id, mix64, mix64_array


@dataclass(frozen=True)
class TableLayout:
    shard_capacities: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        caps = tuple(int(c) for c in self.shard_capacities)
        if not caps:
            raise ValueError("a layout needs at least one shard")
        if min(caps) < 1:
            raise ValueError("every shard needs at least one slot")
        object.__setattr__(self, "shard_capacities", caps)

    @classmethod
    def uniform(cls, total_rows: int, num_shards: int, seed: int = 0) -> "TableLayout":
        """Split ``total_rows`` as evenly as possible; earlier shards take the remainder."""
        if num_shards < 1 or total_rows < num_shards:
            raise ValueError(f"cannot split {total_rows} rows into {num_shards} shards")
        base, extra = divmod(total_rows, num_shards)
        return cls(tuple(base + (1 if s < extra else 0) for s in range(num_shards)), seed)

    @property
    def num_shards(self) -> int:
        return len(self.shard_capacities)

    @property
    def shard_offsets(self) -> tuple[int, ...]:
        offsets, acc = [], 0
        for cap in self.shard_capacities:
            offsets.append(acc)
            acc += cap
        return tuple(offsets)

    @property
    def total_rows(self) -> int:
        return sum(self.shard_capacities)


def shard_of(ident: int, layout: TableLayout) -> int:
    return mix64(check_id(ident) ^ SHARD_SALT, layout.seed) % layout.num_shards


def shard_of_array(ids: np.ndarray, layout: TableLayout) -> np.ndarray:
    if layout.num_shards == 1:
        return np.zeros(len(ids), dtype=np.int64)
    keyed = np.asarray(ids, dtype=np.int64).view(np.uint64) ^ np.uint64(SHARD_SALT)
    return (mix64_array(keyed, layout.seed) % np.uint64(layout.num_shards)).astype(np.int64)


def to_global(shard: int, local_slot: int, layout: TableLayout) -> int:
    if not 0 <= shard < layout.num_shards:
        raise IndexError(f"shard {shard} out of range [0, {layout.num_shards})")
    if not 0 <= local_slot < layout.shard_capacities[shard]:
        raise IndexError(f"slot {local_slot} out of range for shard {shard}")
    return layout.shard_offsets[shard] + local_slot


def from_global(row: int, layout: TableLayout) -> tuple[int, int]:
    if not 0 <= row < layout.total_rows:
        raise IndexError(f"row {row} out of range [0, {layout.total_rows})")
    offsets: Sequence[int] = layout.shard_offsets
    shard = int(np.searchsorted(offsets, row, side="right")) - 1
    return shard, row - offsets[shard]
