"""Random small-shard workloads replayed against both the package and the reference."""
import numpy as np

from mpzch.eviction import EvictionPolicy, make_metadata
from mpzch.probe_core import Shard, ShardConfig

from reference import RefShard

MODES = ("disabled", "ttl", "lru")


def _policy(mode, ttl):
    if mode == "ttl":
        return EvictionPolicy.with_ttl(ttl[0], {1: ttl[1]})
    if mode == "lru":
        return EvictionPolicy.lru()
    return EvictionPolicy.disabled()


def run_workload(seed, n_ops=60):
    """Returns (package results, reference results, final shard, adversarial hits)."""
    rng = np.random.default_rng(seed)
    capacity = int(rng.integers(1, 65))
    probe = int(rng.integers(1, min(8, capacity) + 1))
    mode = MODES[seed % 3]
    ttl = (int(rng.integers(1, 40)), int(rng.integers(1, 40)))
    policy = _policy(mode, ttl)
    shard_seed = int(rng.integers(0, 2**63))
    universe = int(rng.integers(2, 3 * capacity + 3))

    shard = Shard(ShardConfig(capacity, probe, 0, shard_seed))
    ref = RefShard(capacity, probe, shard_seed, mode)
    now = int(rng.integers(0, 1000))
    ours, theirs = [], []
    adversarial = 0
    for _ in range(n_ops):
        now += int(rng.integers(0, 12))
        ident = int(rng.integers(0, universe))
        feature = int(rng.integers(0, 2))
        meta = make_metadata(policy, now, feature)

        if mode == "ttl":
            adversarial += _is_adversarial(ref, ident, now)
        res = shard.lookup_or_insert(ident, now, policy, feature)
        ours.append((res.slot, res.evicted, res.outcome.name))
        theirs.append(ref.lookup(ident, meta, now))
        if rng.random() < 0.2:
            probe_id = int(rng.integers(0, universe))
            ro = shard.lookup(probe_id)
            ours.append((ro.slot, ro.evicted, ro.outcome.name))
            theirs.append(ref.find(probe_id))
    same_state = list(shard.identities) == ref.I and [int(m) for m in shard.metadata] == ref.M
    return ours, theirs, shard, same_state, adversarial


def _is_adversarial(ref, ident, now):
    """ID sits late in its window while an earlier window slot is expired."""
    from reference import ref_hash

    h = ref_hash(ident, ref.seed) % ref.C
    for i in range(ref.P):
        slot = (h + i) % ref.C
        if ref.I[slot] == ident:
            return int(any(ref.I[(h + j) % ref.C] != -1 and ref.M[(h + j) % ref.C] < now
                           for j in range(i)))
    return 0
