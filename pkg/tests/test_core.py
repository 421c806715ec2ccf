import numpy as np
import pytest

from cspd.core import (
    ConfigurationError,
    Dims,
    IterateState,
    ProblemConstants,
    euclidean_norm,
    positive_part,
    update_running_average,
)


def test_dims_validation():
    Dims(d_x=1, d_y=1)
    with pytest.raises(ConfigurationError):
        Dims(d_x=0, d_y=1)
    with pytest.raises(ConfigurationError):
        Dims(d_x=1, d_y=1, m1=-1)


def test_constants_validation():
    ProblemConstants()
    with pytest.raises(ConfigurationError):
        ProblemConstants(c_x=-1.0)
    with pytest.raises(ConfigurationError):
        ProblemConstants(sigma_h=float("nan"))


def test_euclidean_norm_empty():
    assert euclidean_norm(np.zeros(0)) == 0.0
    assert euclidean_norm([3.0, 4.0]) == 5.0


def test_positive_part():
    np.testing.assert_array_equal(positive_part([-1.0, 2.0, 0.0]), [0.0, 2.0, 0.0])


def test_running_average_matches_brute_force():
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(50, 3))
    ys = rng.normal(size=(50, 2))
    state = IterateState(x=np.zeros(3), y=np.zeros(2), gamma=np.zeros(0), lam=np.zeros(0))
    for x, y in zip(xs, ys):
        update_running_average(state, x, y)
    np.testing.assert_allclose(state.x_mean, xs.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(state.y_mean, ys.mean(axis=0), rtol=1e-12)
    assert state.t == 50


def test_running_average_dimension_mismatch():
    state = IterateState(x=np.zeros(3), y=np.zeros(2), gamma=np.zeros(0), lam=np.zeros(0))
    with pytest.raises(ConfigurationError):
        update_running_average(state, np.zeros(4), np.zeros(2))
