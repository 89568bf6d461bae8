"""Stateless hash-to-row assignment, the usual hashing trick (no identities, no eviction)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hashing import check_id, mix64, mix64_array


@dataclass(frozen=True)
class BaselineConfig:
    table_size: int
    seed: int = 0

    def __post_init__(self):
        if self.table_size < 1:
            raise ValueError("table_size must be at least 1")


def baseline_assign(ident: int, cfg: BaselineConfig) -> int:
    return mix64(check_id(ident), cfg.seed) % cfg.table_size


def baseline_assign_array(ids, cfg: BaselineConfig) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    return (mix64_array(ids.view(np.uint64), cfg.seed) % np.uint64(cfg.table_size)).astype(np.int64)


def expected_collision_rate(num_ids: int, table_size: int) -> float:
    """Expected (N - occupied rows) / N for N uniform throws into m rows."""
    n, m = float(num_ids), float(table_size)
    return (n - m * -np.expm1(-n / m)) / n
