import numpy as np
import pytest

from mpzch.embedding_store import EmbeddingTable, RowGenerations, RowInit, gather, reset_row, sgd_step


@pytest.fixture
def table():
    return EmbeddingTable(16, 5, RowInit(3))


def test_reset_zeroes_momentum_and_flags(table):
    sgd_step(table, [2], np.ones((1, 5)), lr=0.1, beta=0.5)
    assert table.trained_flags[2]
    reset_row(table, 2)
    assert np.all(table.momentum[2] == 0)
    assert not table.trained_flags[2]


def test_reset_is_reproducible(table):
    first = gather(table, [7])
    sgd_step(table, [7], np.full((1, 5), 3.0), lr=0.2)
    reset_row(table, 7)
    again = gather(table, [7])
    reset_row(table, 7)
    assert np.array_equal(first.view(np.uint32), again.view(np.uint32))
    assert np.array_equal(again, gather(table, [7]))


def test_reset_bounded():
    for dim in (1, 3, 7, 64, 100):
        t = EmbeddingTable(200, dim, RowInit(1))
        assert np.abs(t.weights).max() <= 1 / np.sqrt(dim)
        assert np.abs(t.weights).max() > 0.5 / np.sqrt(dim)


def test_rows_differ_and_seed_matters():
    a = RowInit(1).draw([0, 1], 8)
    b = RowInit(2).draw([0, 1], 8)
    assert not np.array_equal(a[0], a[1])
    assert not np.array_equal(a, b)


def test_zero_gradient_fixpoint(table):
    w = table.weights.copy()
    sgd_step(table, [1, 2], np.zeros((2, 5)), lr=0.5, beta=0.9)
    assert np.array_equal(w, table.weights)


def test_plain_gradient_descent(table):
    w = table.weights[4].copy()
    g = np.arange(5, dtype=np.float32)
    sgd_step(table, [4], g[None, :], lr=0.25, beta=0.0)
    assert np.array_equal(table.weights[4], w - np.float32(0.25) * g)


def test_momentum_accumulates(table):
    w = table.weights[0].copy()
    g = np.ones((1, 5), dtype=np.float32)
    sgd_step(table, [0], g, lr=0.1, beta=0.5)
    sgd_step(table, [0], g, lr=0.1, beta=0.5)
    np.testing.assert_allclose(table.momentum[0], 1.5)
    np.testing.assert_allclose(table.weights[0], w - 0.1 - 0.15, rtol=1e-6)


def test_repeated_rows_apply_sequentially(table):
    w = table.weights[3].copy()
    sgd_step(table, [3, 3], np.ones((2, 5)), lr=1.0, beta=0.0)
    np.testing.assert_allclose(table.weights[3], w - 2.0, rtol=1e-6)


def test_gather_pure_and_duplicates(table):
    a = gather(table, [1, 1, 5])
    assert np.array_equal(a[0], a[1])
    assert np.array_equal(a, gather(table, [1, 1, 5]))
    a[0] = 99
    assert table.weights[1, 0] != 99


def test_errors(table):
    with pytest.raises(IndexError):
        gather(table, [16])
    with pytest.raises(IndexError):
        reset_row(table, -1)
    with pytest.raises(ValueError):
        sgd_step(table, [0], np.ones((2, 5)), lr=0.1)
    with pytest.raises(ValueError):
        sgd_step(table, [0], np.ones((1, 5)), lr=0.0)
    with pytest.raises(ValueError):
        EmbeddingTable(4, 0)


def test_generations_track_changes():
    gens = RowGenerations(10)
    t = EmbeddingTable(10, 2, tracker=gens)
    mark = gens.cursor()
    assert gens.since(mark).size == 0
    t.reset_row(4)
    t.sgd_step([1], np.ones((1, 2)), 0.1)
    assert gens.since(mark).tolist() == [1, 4]
    with pytest.raises(LookupError):
        gens.since(gens.cursor() + 1)
