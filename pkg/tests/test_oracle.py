import numpy as np

from workloads import run_workload


def test_matches_reference(backend):
    adversarial = 0
    for seed in range(600):
        ours, theirs, shard, same_state, adv = run_workload(seed)
        assert ours == theirs, f"workload {seed}"
        assert same_state, f"workload {seed}"
        live = shard.identities[shard.identities >= 0]
        assert live.size == np.unique(live).size
        adversarial += adv
    assert adversarial > 0
