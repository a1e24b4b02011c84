import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rarekit.rare_sets import RareSet
from rarekit.tails import Degenerate, Pareto
from rarekit.vectors import (
    IndependentMarginals,
    MrvRay,
    fa_isf,
    fa_tail_exact,
    fa_tail_mc,
    mu_measure,
    sample_vector,
    vector_model_from_json,
    ya_sample,
)

PARETO2 = IndependentMarginals((Pareto(2.0, 1.0), Pareto(2.0, 1.0)))
AXES = RareSet([[1, 0], [0, 1]])


def test_sample_vector_examples():
    m = MrvRay(2.0, [1.0], [[1.0, 0.0]])
    rng = np.random.default_rng(3)
    r = Pareto(2.0).isf(1.0 - np.random.default_rng(3).random(4))
    np.testing.assert_allclose(sample_vector(m, rng, 4), np.column_stack([r, np.zeros(4)]))
    d = IndependentMarginals((Degenerate(1), Degenerate(2)))
    assert sample_vector(d, rng, 3).tolist() == [[1, 2]] * 3
    x = sample_vector(PARETO2, np.random.default_rng(4), 10**6)
    assert abs(np.mean(x[:, 0] > 10) - 0.01) < 3 * math.sqrt(0.01 * 0.99 / 10**6)


def test_ya_sample_examples():
    d = IndependentMarginals((Degenerate(1), Degenerate(2)))
    assert ya_sample(d, RareSet([[1, 1]]), 0, 2).values.tolist() == [3.0, 3.0]
    assert ya_sample(d, AXES, np.random.default_rng(0), 1).values.tolist() == [2.0]
    with pytest.raises(ValueError):
        ya_sample(d, RareSet([[1, 1, 1]]), 0, 1)


def test_fa_tail_exact_examples():
    assert fa_tail_exact(PARETO2, AXES, 10.0) == pytest.approx(0.0199, rel=1e-12)
    one_axis = RareSet([[1, 0]])
    assert fa_tail_exact(PARETO2, one_axis, 10.0) == pytest.approx(0.01, rel=1e-12)
    d = IndependentMarginals((Degenerate(1), Degenerate(2)))
    assert fa_tail_exact(d, RareSet([[1, 1]]), 2.9) == 1.0
    assert fa_tail_exact(d, RareSet([[1, 1]]), 3.0) == 0.0
    assert fa_tail_exact(PARETO2, RareSet([[1, 1]]), 10.0) is None


def test_mu_measure_examples():
    m = MrvRay(2.0, [0.5, 0.5], [[1, 0], [0, 1]])
    assert mu_measure(m, AXES) == 1.0
    assert mu_measure(m, RareSet([[2, 0], [0, 1]])) == pytest.approx(0.5 * 4 + 0.5)
    with pytest.raises(TypeError):
        mu_measure(PARETO2, AXES)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.3, 5.0), st.floats(0.01, 0.99), st.floats(0.05, 20.0),
       st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_mu_homogeneity(alpha, w, c, p1, p2):
    if p1 + p2 == 0:
        return
    m = MrvRay(alpha, [w, 1 - w], [[1, 0], [0.3, 0.7]])
    A = RareSet([[p1, p2]])
    assert mu_measure(m, RareSet([[c * p1, c * p2]])) == pytest.approx(c**alpha * mu_measure(m, A), rel=1e-12)


def test_mrv_exact_tail_is_mu_times_radius_tail():
    m = MrvRay(1.5, [0.3, 0.7], [[1, 0], [0.5, 0.5]], scale=2.0)
    A = RareSet([[1, 2]])
    s = m.ray_scales(A)
    mu = mu_measure(m, A)
    # exact once every scaled ray has cleared the radius floor
    for x in np.geomspace(2.0 * s.max(), 1e6, 20):
        assert fa_tail_exact(m, A, x) / (mu * m.radius.tail(x)) == pytest.approx(1.0, rel=1e-12)
        b = 3.0
        assert fa_tail_exact(m, A, b * x) / fa_tail_exact(m, A, x) == pytest.approx(b**-1.5, rel=1e-9)


@pytest.mark.parametrize("model,A", [
    (PARETO2, AXES),
    (MrvRay(2.0, [0.5, 0.5], [[1, 0], [0, 1]]), RareSet([[1, 1]])),
])
def test_mc_matches_exact(model, A):
    xs = [2.0, 5.0, 20.0]
    est = fa_tail_mc(model, A, xs, seed=9, n=10**6)
    for x, e in zip(xs, est):
        assert abs(e.value - fa_tail_exact(model, A, x)) <= 3 * e.std_error


def test_mc_standard_error_scaling():
    a = fa_tail_mc(PARETO2, AXES, 5.0, seed=1, n=10**5)
    b = fa_tail_mc(PARETO2, AXES, 5.0, seed=2, n=4 * 10**5)
    assert a.std_error / b.std_error == pytest.approx(2.0, rel=0.2)
    d = IndependentMarginals((Degenerate(1), Degenerate(2)))
    assert fa_tail_mc(d, AXES, 1.5, seed=0, n=1000).value == 1.0
    assert fa_tail_mc(d, AXES, 2.5, seed=0, n=1000).value == 0.0
    with pytest.raises(ValueError):
        fa_tail_mc(d, AXES, 1.0, seed=0, n=10)


def test_monotone_in_x_and_in_set():
    xs = np.geomspace(1.0, 1e4, 50)
    t = fa_tail_exact(PARETO2, AXES, xs)
    assert (np.diff(t) <= 0).all()
    m = MrvRay(2.0, [0.2, 0.8], [[1, 0], [0.4, 0.6]])
    small = fa_tail_exact(m, RareSet([[1, 0]]), xs)
    big = fa_tail_exact(m, RareSet([[1, 0], [0, 1]]), xs)
    assert (big >= small).all()


def test_fa_isf_inverts():
    q = np.array([0.5, 1e-2, 1e-5])
    x = fa_isf(PARETO2, AXES, q)
    np.testing.assert_allclose(fa_tail_exact(PARETO2, AXES, x), q, rtol=1e-9)


def test_json_and_validation():
    m = MrvRay(2.0, [0.5, 0.5], [[1, 0], [0, 1]], scale=3.0)
    back = vector_model_from_json(m.to_json())
    assert back.alpha == 2.0 and back.scale == 3.0 and np.array_equal(back.rays, m.rays)
    assert vector_model_from_json(PARETO2.to_json()) == PARETO2
    with pytest.raises(ValueError):
        MrvRay(2.0, [0.5, 0.4], [[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        MrvRay(2.0, [1.0], [[1, 1]])
    with pytest.raises(ValueError):
        vector_model_from_json({"kind": "mrv_ray", "alpha": 2, "radius": {"family": "pareto", "alpha": 3},
                                "rays": [{"w": 1, "dir": [1]}]})
