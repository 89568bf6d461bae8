"""Experiments: collision rates, churn/freshness audit, and CPU throughput."""
from __future__ import annotations

import csv
import dataclasses
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar

import numpy as np

from . import _backend
from .baseline import BaselineConfig, baseline_assign_array
from .batch import IdBatch, ShardedTable
from .embedding_store import EmbeddingTable, RowInit
from .eviction import EvictionPolicy, Mode, make_metadata
from .probe_core import Outcome, lookup_or_insert
from .shard_router import TableLayout, shard_of

DEFAULT_PROBES = (8, 16, 32, 64, 128, 256, 512)
METHODS = ("baseline", "mpzch")


@dataclass(frozen=True)
class WorkloadSpec:
    num_ids: int
    table_size: int
    max_probes: tuple[int, ...] = (64,)
    method: str = "mpzch"
    policy: EvictionPolicy = field(default_factory=EvictionPolicy.disabled)
    num_shards: int = 1
    seed: int = 0
    # churn: each step brings `new_per_step` unseen IDs plus `revisits_per_step`
    # draws from IDs that arrived within the last `active_window` steps
    steps: int = 0
    new_per_step: int = 0
    revisits_per_step: int = 0
    active_window: int = 1
    step_seconds: int = 3600
    dim: int = 8
    lr: float = 0.05
    beta: float = 0.9

    def __post_init__(self):
        if self.num_ids < 1:
            raise ValueError("num_ids must be at least 1")
        if self.table_size < 1:
            raise ValueError("table_size must be at least 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.max_probes or min(self.max_probes) < 1:
            raise ValueError("max_probes must be nonempty and positive")
        if self.num_shards < 1 or self.num_shards > self.table_size:
            raise ValueError("num_shards must be in [1, table_size]")
        if min(self.steps, self.new_per_step, self.revisits_per_step) < 0 or self.active_window < 1:
            raise ValueError("churn parameters must be non-negative (active_window >= 1)")
        if self.step_seconds < 0:
            raise ValueError("step_seconds must be non-negative")


def generate_ids(n: int, seed: int) -> np.ndarray:
    """``n`` distinct 63-bit IDs in generation order, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    ids = np.empty(0, dtype=np.int64)
    while ids.size < n:
        fresh = rng.integers(0, 1 << 63, size=n - ids.size, dtype=np.int64)
        merged = np.concatenate([ids, fresh])
        _, first = np.unique(merged, return_index=True)
        ids = merged[np.sort(first)]
    return ids


class _Report:
    FIELDS: ClassVar[tuple[str, ...]] = ()

    def to_records(self) -> list[dict]:
        raise NotImplementedError

    @classmethod
    def from_records(cls, records: list[dict]):
        raise NotImplementedError


@dataclass(frozen=True)
class CollisionRecord:
    table_size: int
    capacity_ratio: float
    max_probe: int
    method: str
    collision_rate: float
    distinct_slots: int
    seed: int


@dataclass
class CollisionReport(_Report):
    FIELDS: ClassVar = tuple(f.name for f in dataclasses.fields(CollisionRecord))
    records: list[CollisionRecord] = field(default_factory=list)

    def to_records(self):
        return [dataclasses.asdict(r) for r in self.records]

    @classmethod
    def from_records(cls, records):
        types = {f.name: f.type for f in dataclasses.fields(CollisionRecord)}
        return cls([CollisionRecord(**{k: _coerce(types[k], v) for k, v in r.items()}) for r in records])

    def rate(self, table_size: int, max_probe: int, method: str = "mpzch") -> float:
        for r in self.records:
            if (r.table_size, r.max_probe, r.method) == (table_size, max_probe, method):
                return r.collision_rate
        raise KeyError((table_size, max_probe, method))


@dataclass
class FreshnessReport(_Report):
    FIELDS: ClassVar = ("method", "steps", "first_occurrences", "inherited", "inheritance_rate",
                        "eviction_count", "collision_count", "reset_violations", "seed")
    method: str = "mpzch"
    steps: int = 0
    first_occurrences: int = 0
    inherited: int = 0
    inheritance_rate: float = 0.0
    eviction_count: int = 0
    collision_count: int = 0
    reset_violations: int = 0
    seed: int = 0

    def to_records(self):
        return [{k: getattr(self, k) for k in self.FIELDS}]

    @classmethod
    def from_records(cls, records):
        if not records:
            return cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        return cls(**{k: _coerce(types[k], v) for k, v in records[0].items()})


@dataclass(frozen=True)
class LatencyRecord:
    max_probe: int
    backend: str
    batch_size: int
    batches: int
    batched_ms_per_batch: float
    per_id_ms_per_batch: float
    batched_ids_per_s: float
    per_id_ids_per_s: float
    found: int
    inserted: int
    evicted: int
    collision: int
    counts_match: bool


@dataclass
class LatencyReport(_Report):
    FIELDS: ClassVar = tuple(f.name for f in dataclasses.fields(LatencyRecord))
    records: list[LatencyRecord] = field(default_factory=list)

    def to_records(self):
        return [dataclasses.asdict(r) for r in self.records]

    @classmethod
    def from_records(cls, records):
        types = {f.name: f.type for f in dataclasses.fields(LatencyRecord)}
        return cls([LatencyRecord(**{k: _coerce(types[k], v) for k, v in r.items()}) for r in records])


def _coerce(type_name, value):
    name = type_name if isinstance(type_name, str) else type_name.__name__
    if name == "bool":
        return value if isinstance(value, bool) else str(value) == "True"
    if name == "int":
        return int(value)
    if name == "float":
        return float(value)
    return str(value)


def _collision_record(spec: WorkloadSpec, max_probe: int, rows: np.ndarray) -> CollisionRecord:
    distinct = int(np.unique(rows).size)
    return CollisionRecord(
        table_size=spec.table_size,
        capacity_ratio=spec.table_size / spec.num_ids,
        max_probe=max_probe,
        method=spec.method,
        collision_rate=(spec.num_ids - distinct) / spec.num_ids,
        distinct_slots=distinct,
        seed=spec.seed,
    )


def run_collision_experiment(spec: WorkloadSpec) -> CollisionReport:
    """One-shot insertion of ``num_ids`` distinct IDs, eviction disabled.

    The baseline does not depend on probe depth and yields a single record
    (``max_probe = 0``); MPZCH yields one record per probe depth, each on a
    fresh table.
    """
    ids = generate_ids(spec.num_ids, spec.seed)
    if spec.method == "baseline":
        rows = baseline_assign_array(ids, BaselineConfig(spec.table_size, spec.seed))
        return CollisionReport([_collision_record(spec, 0, rows)])
    report = CollisionReport()
    batch = IdBatch(ids, now=0)
    for p in spec.max_probes:
        layout = TableLayout.uniform(spec.table_size, spec.num_shards, spec.seed)
        table = ShardedTable(layout, p, EvictionPolicy.disabled())
        out = table.process_batch(batch)
        report.records.append(_collision_record(spec, p, out.rows))
    return report


def run_churn_simulation(spec: WorkloadSpec, audit: bool = True) -> FreshnessReport:
    """Stream arriving and returning IDs through a table while training rows.

    A first-occurrence ID "inherits" when its assigned row has already been
    trained by someone else. With ``audit`` every evicted row is checked for a
    fresh reset before any gradient reaches it.
    """
    max_probe = max(spec.max_probes)
    rng = np.random.default_rng(spec.seed)
    pool = generate_ids(max(1, spec.steps * spec.new_per_step), spec.seed ^ 0x5EED)
    init = RowInit(spec.seed)

    if spec.method == "mpzch":
        layout = TableLayout.uniform(spec.table_size, spec.num_shards, spec.seed)
        table = ShardedTable(layout, max_probe, spec.policy, spec.dim, spec.seed)
        store = table.embeddings
    else:
        table = None
        store = EmbeddingTable(spec.table_size, spec.dim, init)
        cfg = BaselineConfig(spec.table_size, spec.seed)

    report = FreshnessReport(method=spec.method, steps=spec.steps, seed=spec.seed)
    for step in range(spec.steps):
        now = step * spec.step_seconds
        new = pool[step * spec.new_per_step:(step + 1) * spec.new_per_step]
        lo = max(0, step - spec.active_window) * spec.new_per_step
        recent = pool[lo:step * spec.new_per_step]
        revisits = (rng.choice(recent, size=spec.revisits_per_step)
                    if recent.size and spec.revisits_per_step else np.empty(0, dtype=np.int64))
        ids = np.concatenate([new, revisits])
        order = rng.permutation(ids.size)
        ids = ids[order]
        is_new = order < new.size

        if table is not None:
            out = table.process_batch(IdBatch(ids, now=now))
            rows = out.rows
            counts = out.counts()
            report.eviction_count += counts["evicted"]
            report.collision_count += counts["collision"]
            if audit:
                ev = out.unique_rows[out.unique_outcomes == Outcome.EVICTED]
                bad = store.trained_flags[ev] | np.any(store.momentum[ev] != 0, axis=1)
                report.reset_violations += int(np.count_nonzero(bad))
        else:
            rows = baseline_assign_array(ids, cfg)

        report.first_occurrences += int(np.count_nonzero(is_new))
        report.inherited += int(np.count_nonzero(store.trained_flags[rows[is_new]]))

        uniq = np.unique(rows)
        if uniq.size:
            grads = rng.standard_normal((uniq.size, spec.dim)).astype(np.float32)
            store.sgd_step(uniq, grads, spec.lr, spec.beta)

    if report.first_occurrences:
        report.inheritance_rate = report.inherited / report.first_occurrences
    return report


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def run_latency_bench(spec: WorkloadSpec, batch_size: int = 1024, repetitions: int = 3) -> LatencyReport:
    """Wall time of batched calls versus one call per ID, per probe depth.

    Timings are informational; outcome counts are deterministic and are
    checked to agree between the two modes.
    """
    if batch_size < 1 or repetitions < 1:
        raise ValueError("batch_size and repetitions must be positive")
    ids = generate_ids(spec.num_ids, spec.seed)
    batches = [ids[i:i + batch_size] for i in range(0, ids.size, batch_size)]
    report = LatencyReport()
    for p in spec.max_probes:
        layout = TableLayout.uniform(spec.table_size, spec.num_shards, spec.seed)
        batched_times, per_id_times = [], []
        batched_counts = per_id_counts = None
        for _ in range(repetitions):
            table = ShardedTable(layout, p, spec.policy)
            tally = np.zeros(len(Outcome), dtype=np.int64)

            def batched():
                for step, chunk in enumerate(batches):
                    out = table.process_batch(IdBatch(chunk, now=step * spec.step_seconds))
                    tally[:] += np.bincount(out.unique_outcomes, minlength=len(Outcome))

            batched_times.append(_timed(batched))
            batched_counts = tally.copy()

            ref = ShardedTable(layout, p, spec.policy)
            tally2 = np.zeros(len(Outcome), dtype=np.int64)

            def per_id():
                for step, chunk in enumerate(batches):
                    now = step * spec.step_seconds
                    for ident in chunk.tolist():
                        shard = ref.shards[shard_of(ident, layout)]
                        meta = make_metadata(spec.policy, now, 0)
                        res = lookup_or_insert(ident, meta, now, shard.identities, shard.metadata,
                                               shard.cfg, spec.policy)
                        tally2[res.outcome] += 1

            per_id_times.append(_timed(per_id))
            per_id_counts = tally2.copy()

        nb = len(batches)
        tb, tp = statistics.median(batched_times), statistics.median(per_id_times)
        report.records.append(LatencyRecord(
            max_probe=p,
            backend=_backend.BACKEND,
            batch_size=batch_size,
            batches=nb,
            batched_ms_per_batch=1e3 * tb / nb,
            per_id_ms_per_batch=1e3 * tp / nb,
            batched_ids_per_s=ids.size / tb if tb > 0 else float("inf"),
            per_id_ids_per_s=ids.size / tp if tp > 0 else float("inf"),
            found=int(batched_counts[Outcome.FOUND]),
            inserted=int(batched_counts[Outcome.INSERTED]),
            evicted=int(batched_counts[Outcome.EVICTED]),
            collision=int(batched_counts[Outcome.COLLISION]),
            counts_match=bool(np.array_equal(batched_counts, per_id_counts)),
        ))
    return report


def emit_report(report: _Report, fmt: str, path) -> None:
    records = report.to_records()
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(records, indent=2) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(report.FIELDS))
            writer.writeheader()
            writer.writerows(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_report(path, fmt: str, kind: type[_Report]) -> _Report:
    path = Path(path)
    if fmt == "json":
        records = json.loads(path.read_text())
    elif fmt == "csv":
        with path.open(newline="") as fh:
            records = list(csv.DictReader(fh))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return kind.from_records(records)


def policy_mode_name(policy: EvictionPolicy) -> str:
    return Mode(policy.mode).name.lower()
