import numpy as np
import pytest

from mpzch.batch import FrozenTableError, IdBatch, ShardedTable, dedup, process_batch
from mpzch.eviction import EvictionPolicy
from mpzch.probe_core import Outcome, ShardConfig, home_slot
from mpzch.shard_router import TableLayout, shard_of


def test_dedup_basic():
    d = dedup(IdBatch([10, 20, 10]))
    assert d.uniques == [(10, 0), (20, 0)]
    assert d.inverse.tolist() == [0, 1, 0]


def test_dedup_empty():
    d = dedup(IdBatch([]))
    assert d.uniques == [] and d.inverse.tolist() == []


def test_dedup_distinct_is_identity():
    ids = np.random.default_rng(0).permutation(500)
    d = dedup(IdBatch(ids))
    assert d.ids.tolist() == ids.tolist()
    assert d.inverse.tolist() == list(range(500))


def test_dedup_keys_on_feature_too():
    d = dedup(IdBatch.from_pairs([(1, 0), (1, 1), (1, 0)]))
    assert d.uniques == [(1, 0), (1, 1)]
    assert d.inverse.tolist() == [0, 1, 0]


def test_batch_rejects_sentinel_with_position():
    with pytest.raises(ValueError, match="position 2"):
        IdBatch([1, 2, -1])


def test_duplicates_share_one_insert(backend):
    table = ShardedTable(TableLayout((64,)), 4)
    out = table.process_batch(IdBatch([42, 42]))
    assert out.rows[0] == out.rows[1]
    assert out[0] == out[1]
    assert out.counts()["inserted"] == 1 and out.unique_outcomes.size == 1


def test_same_home_pair_goes_to_adjacent_slots(backend):
    cap = 16
    cfg = ShardConfig(cap, 4)
    homes = {}
    p = q = None
    for i in range(10_000):
        h = home_slot(i, cfg)
        if h in homes:
            p, q = homes[h], i
            break
        homes[h] = i
    table = ShardedTable(TableLayout((cap,)), 4)
    out = table.process_batch(IdBatch([p, q]))
    h = home_slot(p, cfg)
    assert out.rows.tolist() == [h, (h + 1) % cap]
    assert out.outcomes.tolist() == [Outcome.INSERTED, Outcome.INSERTED]


def test_batch_equals_singletons(backend):
    layout = TableLayout((20, 13, 31), seed=4)
    policy = EvictionPolicy.with_ttl(5)
    ids = np.random.default_rng(1).integers(0, 80, 60)
    a = ShardedTable(layout, 4, policy)
    b = ShardedTable(layout, 4, policy)
    for now in (0, 3, 9):
        out = a.process_batch(IdBatch(ids, now=now))
        d = dedup(IdBatch(ids))
        single = [b.process_batch(IdBatch([i], now=now)) for i in d.ids]
        assert [s.rows[0] for s in single] == out.unique_rows.tolist()
        assert [s.outcomes[0] for s in single] == out.unique_outcomes.tolist()
    assert np.array_equal(a.identities(), b.identities())
    assert np.array_equal(a.metadata(), b.metadata())


def test_locality_and_global_rows(backend):
    layout = TableLayout((10, 30, 20), seed=2)
    table = ShardedTable(layout, 5)
    ids = np.arange(1000, 1040)
    out = table.process_batch(IdBatch(ids))
    offsets = layout.shard_offsets
    for ident, row in zip(ids.tolist(), out.rows.tolist()):
        s = shard_of(ident, layout)
        assert offsets[s] <= row < offsets[s] + layout.shard_capacities[s]


def test_parallel_matches_sequential(backend, monkeypatch):
    monkeypatch.setenv("ZCH_THREADS", "4")
    layout = TableLayout((50, 40, 60, 30), seed=8)
    policy = EvictionPolicy.lru()
    par = ShardedTable(layout, 6, policy, dim=3)
    seq = ShardedTable(layout, 6, policy, dim=3)
    rng = np.random.default_rng(3)
    for step in range(30):
        batch = IdBatch(rng.integers(0, 400, 90), now=step)
        o1 = par.process_batch(batch, parallel=True)
        o2 = seq.process_batch(batch, parallel=False)
        assert np.array_equal(o1.rows, o2.rows) and np.array_equal(o1.outcomes, o2.outcomes)
    assert np.array_equal(par.identities(), seq.identities())
    assert np.array_equal(par.embeddings.weights, seq.embeddings.weights)


def test_eviction_resets_rows(backend):
    table = ShardedTable(TableLayout((4,)), 4, EvictionPolicy.with_ttl(10), dim=2)
    out = table.process_batch(IdBatch([1, 2, 3, 4], now=0))
    table.embeddings.sgd_step(np.unique(out.rows), np.ones((4, 2)), 0.1, 0.9)
    out = table.process_batch(IdBatch([5], now=100))
    assert out.outcomes[0] == Outcome.EVICTED and out.evicted[0]
    r = out.rows[0]
    assert not table.embeddings.trained_flags[r]
    assert np.all(table.embeddings.momentum[r] == 0)


def test_max_probe_capped_per_shard():
    table = ShardedTable(TableLayout((3, 50)), 8)
    assert [s.cfg.max_probe for s in table.shards] == [3, 8]


def test_process_batch_rejects_non_table():
    with pytest.raises(FrozenTableError):
        process_batch(object(), IdBatch([1]))
