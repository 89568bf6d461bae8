import numpy as np
import pytest

from mpzch.baseline import BaselineConfig, baseline_assign, baseline_assign_array, expected_collision_rate
from mpzch.bench import generate_ids


def test_single_row():
    cfg = BaselineConfig(1)
    assert {baseline_assign(i, cfg) for i in range(100)} == {0}


def test_deterministic_and_vectorized():
    cfg = BaselineConfig(1000, seed=3)
    ids = generate_ids(500, 1)
    assert baseline_assign_array(ids, cfg).tolist() == [baseline_assign(int(i), cfg) for i in ids]


def test_config_validation():
    with pytest.raises(ValueError):
        BaselineConfig(0)


def test_expected_rate_matches_table_values():
    # Sigrid column of the collision table at ratios 0.67x, 1.00x, 2.00x
    assert expected_collision_rate(150, 100) == pytest.approx(0.482080, abs=5e-5)
    assert expected_collision_rate(150, 150) == pytest.approx(0.367917, abs=5e-5)
    assert expected_collision_rate(150, 300) == pytest.approx(0.213082, abs=5e-5)


def test_expected_rate_against_monte_carlo():
    # independent simulation with numpy's own generator, not the package hash
    rng = np.random.default_rng(0)
    n, m = 200_000, 150_000
    distinct = np.unique(rng.integers(0, m, n)).size
    assert (n - distinct) / n == pytest.approx(expected_collision_rate(n, m), abs=3e-3)


def test_full_scale_rate():
    n = 1_500_000
    rows = baseline_assign_array(generate_ids(n, 0), BaselineConfig(n))
    rate = (n - np.unique(rows).size) / n
    assert abs(rate - 0.3679) <= 0.002
