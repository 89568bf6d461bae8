"""Trainable embedding rows with momentum, reset whenever a slot is reassigned."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hashing import mix64_array

_ROW_SALT = 0x94D049BB133111EB
_UNIT_BITS = 24


class RowGenerations:
    """Per-row change stamps, used to find rows modified since a cursor."""

    def __init__(self, num_rows: int):
        self.version = 0
        self.stamps = np.zeros(num_rows, dtype=np.int64)

    def touch(self, rows) -> None:
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size:
            self.version += 1
            self.stamps[rows] = self.version

    def cursor(self) -> int:
        return self.version

    def since(self, mark: int) -> np.ndarray:
        if not 0 <= mark <= self.version:
            raise LookupError(f"unknown publication cursor {mark} (current {self.version})")
        return np.flatnonzero(self.stamps > mark)


def _bound(dim: int) -> np.float32:
    # largest float32 not above 1/sqrt(dim)
    exact = 1.0 / math.sqrt(dim)
    b = np.float32(exact)
    if float(b) > exact:
        b = np.nextafter(b, np.float32(0))
    return b


@dataclass(frozen=True)
class RowInit:
    """Uniform init on [-1/sqrt(d), 1/sqrt(d)] from a per-row counter stream.

    Each row's draw depends only on (init_seed, row), never on history.
    """

    init_seed: int = 0

    def draw(self, rows, dim: int) -> np.ndarray:
        rows = np.atleast_1d(np.asarray(rows, dtype=np.int64)).view(np.uint64)
        keys = mix64_array(rows ^ np.uint64(_ROW_SALT), self.init_seed)
        counters = keys[:, None] + np.arange(dim, dtype=np.uint64)[None, :]
        bits = (mix64_array(counters, self.init_seed) >> np.uint64(64 - _UNIT_BITS)).astype(np.int64)
        # (2v - 2^24) / 2^24 is exact in float32 and lies in [-1, 1)
        unit = (2 * bits - (1 << _UNIT_BITS)).astype(np.float32) / np.float32(1 << _UNIT_BITS)
        return unit * _bound(dim)


class EmbeddingTable:
    def __init__(self, num_rows: int, dim: int, init: RowInit | None = None,
                 tracker: RowGenerations | None = None):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        if num_rows < 1:
            raise ValueError("num_rows must be at least 1")
        self.dim = dim
        self.init = init or RowInit()
        self.tracker = tracker
        self.weights = self.init.draw(np.arange(num_rows), dim)
        self.momentum = np.zeros((num_rows, dim), dtype=np.float32)
        self.trained_flags = np.zeros(num_rows, dtype=bool)

    @property
    def num_rows(self) -> int:
        return self.weights.shape[0]

    def _check_rows(self, rows) -> np.ndarray:
        rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
        if rows.size and (rows.min() < 0 or rows.max() >= self.num_rows):
            raise IndexError(f"row index out of range [0, {self.num_rows})")
        return rows

    def reset_row(self, row: int) -> None:
        self.reset_rows([row])

    def reset_rows(self, rows) -> None:
        rows = np.unique(self._check_rows(rows))
        if not rows.size:
            return
        self.weights[rows] = self.init.draw(rows, self.dim)
        self.momentum[rows] = 0.0
        self.trained_flags[rows] = False
        if self.tracker is not None:
            self.tracker.touch(rows)

    def sgd_step(self, rows, grads, lr: float, beta: float = 0.0) -> None:
        """Momentum SGD: ``m = beta*m + g``; ``w -= lr*m``.

        Repeated rows are applied one after another in the given order.
        """
        rows = self._check_rows(rows)
        grads = np.asarray(grads, dtype=np.float32)
        if grads.shape != (rows.size, self.dim):
            raise ValueError(f"grads shape {grads.shape} does not match ({rows.size}, {self.dim})")
        if not lr > 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= beta < 1.0:
            raise ValueError("beta must be in [0, 1)")
        lr32, beta32 = np.float32(lr), np.float32(beta)
        if np.unique(rows).size == rows.size:
            self.momentum[rows] = beta32 * self.momentum[rows] + grads
            self.weights[rows] -= lr32 * self.momentum[rows]
        else:
            for row, grad in zip(rows.tolist(), grads):
                self.momentum[row] = beta32 * self.momentum[row] + grad
                self.weights[row] -= lr32 * self.momentum[row]
        self.trained_flags[rows] = True
        if self.tracker is not None:
            self.tracker.touch(rows)

    def gather(self, rows) -> np.ndarray:
        return self.weights[self._check_rows(rows)].copy()


def reset_row(table: EmbeddingTable, global_row: int, init: RowInit | None = None) -> None:
    if init is not None and init != table.init:
        raise ValueError("reset must use the table's own initializer")
    table.reset_row(global_row)


def sgd_step(table: EmbeddingTable, rows, grads, lr: float, beta: float = 0.0) -> None:
    table.sgd_step(rows, grads, lr, beta)


def gather(table: EmbeddingTable, rows) -> np.ndarray:
    return table.gather(rows)
