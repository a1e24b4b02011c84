import numpy as np
import pytest

from rarekit import mc


def test_estimate_validation():
    with pytest.raises(ValueError):
        mc.EstimateCI(0.1, -1.0, 10, 0)
    with pytest.raises(ValueError):
        mc.EstimateCI(0.1, float("nan"), 10, 0)
    with pytest.raises(ValueError):
        mc.EstimateCI(0.1, 0.0, 0, 0)
    e = mc.EstimateCI(2.0, 0.5, 10, 3)
    assert e.interval() == (0.5, 3.5)
    assert e.scaled(-2.0) == mc.EstimateCI(-4.0, 1.0, 10, 3)


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True, "3"])
def test_bad_seeds(seed):
    with pytest.raises((ValueError, TypeError)):
        mc.check_seed(seed)


def test_chunk_plan():
    assert mc.chunk_plan(10, 4) == [4, 4, 2]
    assert mc.chunk_plan(8, 4) == [4, 4]
    with pytest.raises(ValueError):
        mc.chunk_plan(0)


def test_results_do_not_depend_on_threads():
    def fn(rng, size):
        return np.array([rng.random(size).sum()])

    a = mc.sum_chunks(mc.map_chunks(fn, 42, 10_000, threads=1, chunk_size=1000))
    b = mc.sum_chunks(mc.map_chunks(fn, 42, 10_000, threads=4, chunk_size=1000))
    assert a.tobytes() == b.tobytes()
    c = mc.sum_chunks(mc.map_chunks(fn, 43, 10_000, threads=1, chunk_size=1000))
    assert a[0] != c[0]


def test_binomial_and_mean():
    e = mc.binomial_estimate(25, 100, 1)
    assert e.value == 0.25 and e.std_error == pytest.approx(np.sqrt(0.25 * 0.75 / 100))
    m = mc.mean_estimate(10.0, 30.0, 5, 0)
    assert m.value == 2.0 and m.std_error == pytest.approx(np.sqrt(2.0 / 4))
