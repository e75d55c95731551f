import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import tiny_instance
from edgecast.instance import make_instance
from edgecast.sampling import (
    draw_from_demand,
    draw_samples,
    draw_samples_parallel,
    load_samples,
    save_samples,
    uniform_popularity,
    zipf_popularity,
)


def test_zipf_examples():
    assert np.allclose(zipf_popularity(2, 1.0), [2 / 3, 1 / 3])
    assert np.allclose(zipf_popularity(5, 0.0), uniform_popularity(5))
    assert np.array_equal(zipf_popularity(1, 1.3), [1.0])


def test_point_mass_demand():
    A = draw_from_demand(np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]), 500, seed=9)
    assert np.all(A[:, 0] == 1) and np.all(A[:, 1] == 0)


def test_same_seed_same_samples():
    inst = tiny_instance(0, K=3, F=4)
    assert np.array_equal(draw_samples(inst, 100, 5), draw_samples(inst, 100, 5))
    assert not np.array_equal(draw_samples(inst, 100, 5), draw_samples(inst, 100, 6))


def test_law_of_large_numbers():
    inst = make_instance([1e6, 1e6], 2.0, 10, 0, 0, 1e11, [0.1], [0.8, 0.2], 0.1, 1e-27)
    A = draw_samples(inst, 100_000, 11)
    assert abs(np.mean(A[:, 0] == 0) - 0.8) < 0.01


@given(st.integers(0, 2**32 - 1), st.integers(0, 50), st.integers(1, 60))
def test_slices_agree_with_full_draw(seed, start, n):
    P = np.array([[0.1, 0.2, 0.7], [0.5, 0.25, 0.25]])
    full = draw_from_demand(P, start + n, seed)
    assert np.array_equal(draw_from_demand(P, n, seed, start), full[start:])


@pytest.mark.parametrize("workers", [1, 3, 8])
def test_parallel_draw_identical(workers):
    inst = tiny_instance(2, K=4, F=5)
    assert np.array_equal(draw_samples_parallel(inst, 10_001, 3, workers=workers, chunk=997), draw_samples(inst, 10_001, 3))


def test_samples_csv_round_trip(tmp_path):
    A = draw_samples(tiny_instance(1, K=3, F=4), 25, 0)
    save_samples(tmp_path / "a.csv", A)
    assert np.array_equal(load_samples(tmp_path / "a.csv"), A)


def test_zero_probability_task_never_drawn():
    A = draw_from_demand(np.array([[0.0, 0.5, 0.0, 0.5]]), 20_000, 4)
    assert set(np.unique(A)) == {1, 3}
