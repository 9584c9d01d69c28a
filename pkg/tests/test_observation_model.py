import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from privquant.observation_model import (BernoulliEventSensors, SensorArray, SensorSpec, cooperative_observability,
                                         observe, sample_measurement_matrix, spectral)
from privquant.scenarios import THETA, split_sensors


class FixedRng:
    """Feeds chosen values to ``random`` and ``standard_normal``."""

    def __init__(self, u, z):
        self.u, self.z = u, z

    def random(self):
        return self.u

    def standard_normal(self, size):
        return np.full(size, self.z)


def test_odd_sensor_without_failure_sees_twice_first_coordinate():
    spec = SensorSpec.failing([[2.0, 0.0]], 0.5, 0.1)
    assert observe(spec, THETA, FixedRng(0.9, 0.0)) == pytest.approx([2.0])


def test_failure_gives_pure_noise():
    spec = SensorSpec.failing([[2.0, 0.0]], 0.5, 0.1)
    assert observe(spec, THETA, FixedRng(0.1, 0.0)) == pytest.approx([0.0])
    y = [observe(spec, THETA, FixedRng(0.1, z))[0] for z in (-1.0, 1.0)]
    assert np.mean(y) == 0.0


def test_observation_mean_matches_hbar_theta():
    spec = SensorSpec.failing([[2.0, 1.0], [0.0, -1.0]], 0.3, 0.5)
    rng = np.random.default_rng(0)
    y = np.array([observe(spec, THETA, rng) for _ in range(100_000)])
    se = y.std(axis=0, ddof=1) / np.sqrt(len(y))
    assert np.all(np.abs(y.mean(axis=0) - spec.mean_matrix @ THETA) <= 3 * se)


def test_mean_measurement_matrix_is_hbar():
    spec = SensorSpec.failing([[2.0, 0.0]], 0.5)
    rng = np.random.default_rng(1)
    h = np.array([sample_measurement_matrix(spec, rng) for _ in range(100_000)])
    se = h.std(axis=0, ddof=1) / np.sqrt(len(h)) + 1e-15
    assert np.all(np.abs(h.mean(axis=0) - spec.mean_matrix) <= 3 * se)


def test_noiseless_observation_is_exact():
    spec = SensorSpec.failing([[1.5, -2.0]], 0.0, 0.0)
    rng = np.random.default_rng(2)
    assert observe(spec, THETA, rng)[0] == 1.5 + 2.0


def test_inconsistent_mean_matrix_rejected():
    with pytest.raises(ValueError, match="mean_matrix"):
        SensorSpec(np.array([[1.0, 0.0]]), np.array([[2.0, 0.0]]), 0.0)


def test_spectral_of_coordinate_row():
    info = spectral(np.array([[1.0, 0.0]]))
    np.testing.assert_array_equal(info.Q, np.diag([1.0, 0.0]))
    assert info.lambda_min_plus == 1.0 and info.rank == 1


def test_spectral_of_zero_matrix():
    info = spectral(np.zeros((1, 2)))
    assert info.rank == 0 and info.lambda_min_plus is None


def test_spectral_matches_singular_values():
    h = np.random.default_rng(3).standard_normal((3, 2))
    np.testing.assert_allclose(spectral(h).eigenvalues, np.sort(np.linalg.svd(h, compute_uv=False) ** 2),
                               atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 4)), elements=st.floats(-5, 5)))
def test_spectral_reconstructs_q(h):
    info = spectral(h)
    q = info.eigenvectors @ np.diag(info.eigenvalues) @ info.eigenvectors.T
    assert np.linalg.norm(q - info.Q) <= 1e-9 * max(1.0, info.lambda_max)
    np.testing.assert_allclose(info.Q, info.Q.T)
    assert np.linalg.eigvalsh(info.Q).min() >= -1e-10 * max(1.0, info.lambda_max)
    if info.rank:
        assert info.lambda_min_plus > 0


def test_reference_network_is_cooperatively_observable():
    assert cooperative_observability(split_sensors(8, 2).specs)


def test_all_zero_sensors_not_observable():
    assert not cooperative_observability([np.zeros((1, 2))] * 3)


def test_one_full_rank_sensor_suffices():
    assert cooperative_observability([np.eye(3), np.zeros((1, 3)), np.zeros((2, 3))])


def test_sensor_array_draws_without_failures_or_noise():
    arr = SensorArray([SensorSpec.failing([[2.0, 0.0]]), SensorSpec.failing([[0.0, 1.0], [1.0, 1.0]])])
    y = arr.draw(THETA, np.random.default_rng(0), np.random.default_rng(1), 3)
    assert y.shape == (3, 2, 2)
    np.testing.assert_array_equal(y[:, 0], [[2.0, 0.0]] * 3)     # padded row stays zero
    np.testing.assert_array_equal(y[:, 1], [[-1.0, 0.0]] * 3)


def test_event_sensors_have_bernoulli_moments():
    ev = BernoulliEventSensors(1, participation=0.7)
    y = ev.draw([0.2699], np.random.default_rng(4), np.random.default_rng(5), 200_000)[:, 0, 0]
    assert abs(y.mean() - 0.7 * 0.2699) < 3 * y.std() / np.sqrt(len(y))
    # with everyone participating the report is a Bernoulli(theta) draw
    p = 0.2699
    full = BernoulliEventSensors(1, participation=1.0)
    z = full.draw([p], np.random.default_rng(6), np.random.default_rng(7), 200_000)[:, 0, 0]
    assert np.var(z) == pytest.approx(p * (1 - p), rel=0.02)


def test_event_rate_must_be_probability():
    with pytest.raises(ValueError):
        BernoulliEventSensors(2).draw([1.5], np.random.default_rng(0), np.random.default_rng(0), 1)
