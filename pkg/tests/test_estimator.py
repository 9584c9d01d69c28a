import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from privquant.estimator import (AlgorithmConfig, EstimatorState, NonFiniteEstimate, StepSizeSchedule, advance,
                                 compression_vector, default_warmup, quantize, run, simulate, step,
                                 validate_assumptions)
from privquant.graph_model import MarkovChain, TopologyChainLinks, TopologySet
from privquant.noise_models import NoiseSchedule
from privquant.observation_model import SensorArray, SensorSpec
from privquant.scenarios import THETA, highdim_config, reference_config


def static_links(adjacency):
    a = np.asarray(adjacency, dtype=float)
    return TopologyChainLinks(TopologySet(len(a), (a,)), MarkovChain(np.eye(1), np.ones(1)))


def pair_config(h=(1.0, 2.0), alpha=1.0, gamma=0.5, beta=0.5, k0=1):
    links = static_links([[0, 1], [1, 0]])
    sensors = SensorArray([SensorSpec.failing([[h[0]]]), SensorSpec.failing([[h[1]]])])
    steps = StepSizeSchedule([alpha], [gamma], [beta, beta], [1.0, 1.0], [k0, k0])
    return AlgorithmConfig(links, sensors, [NoiseSchedule("gaussian")], steps)


# -- building blocks ------------------------------------------------------------

def test_compression_vector_examples():
    np.testing.assert_array_equal(compression_vector(2, 1), [1, 0])
    np.testing.assert_array_equal(compression_vector(2, 2), [0, 1])
    np.testing.assert_array_equal(compression_vector(2, 3), [1, 0])
    np.testing.assert_array_equal(compression_vector(1, 17), [1])
    np.testing.assert_array_equal(compression_vector(3, 6), [0, 0, 1])
    with pytest.raises(ValueError):
        compression_vector(2, 0)


def test_quantize_examples():
    assert quantize(0.3, -0.5, 0.0) == 1
    assert quantize(0.3, 0.5, 0.0) == -1
    assert quantize(0.25, 0.5, 0.75) == 1


# multiples of 2^-10 below 2^20 add without rounding, so the comparison is exact
grid = st.integers(-2**30, 2**30).map(lambda i: i / 1024)


@given(grid, grid, grid, grid)
def test_quantizer_shift_symmetry(x, d, c, shift):
    assert quantize(x + shift, d, c + shift) == quantize(x, d, c)


def test_default_warmup():
    assert default_warmup(3.0, 1.0) == 8
    assert default_warmup(2.0, 1.0) == 3
    assert default_warmup(0.4, 1.0) == 1
    for b, d in [(3.0, 1.0), (10.0, 1.0), (2.5, 0.7), (0.9, 0.6)]:
        assert b < default_warmup(b, d) ** d


def test_step_sizes_vanish_before_warmup():
    s = StepSizeSchedule.uniform(3, 2, 3.0, 0.8, 3.0)
    np.testing.assert_array_equal(s.beta(7), [0.0, 0.0])
    np.testing.assert_allclose(s.beta(8), [3 / 8, 3 / 8])
    np.testing.assert_allclose(s.alpha(32), 3 / 32 ** 0.8)


# -- one iteration --------------------------------------------------------------

def test_hand_trace_two_sensors():
    cfg = pair_config()
    est = np.array([[[0.2], [-0.3]]])
    # sensor 1 compares 0.2 + 0.1 > 0 -> -1; sensor 2 compares -0.3 - 0.1 <= 0 -> +1
    privacy = np.array([[[[0.1], [-0.1]]]])
    y = np.array([[[0.5], [1.0]]])
    out = advance(cfg, est, 1, None, np.zeros((1, 1)), privacy, y)
    np.testing.assert_array_equal(out.signals[0, 0, :, 0], [-1.0, 1.0])
    # fusion: alpha * a * (s12 - s21) = -2 for sensor 1 and +2 for sensor 2
    np.testing.assert_allclose(out.fusion[0, :, 0], [-2.0, 2.0])
    # innovation: beta * H * (y - H x) = 0.5 * 1 * 0.3 and 0.5 * 2 * 1.6
    np.testing.assert_allclose(out.innovation[0, :, 0], [0.15, 1.6])
    np.testing.assert_allclose(out.estimates[0, :, 0], [-1.65, 3.3])
    np.testing.assert_array_equal(out.bits, [[1, 1]])


def test_isolated_network_without_innovation_is_frozen():
    cfg = reference_config(communicate=False, k0=10**9)
    state = EstimatorState(0, np.arange(16.0).reshape(8, 2))
    rng = np.random.default_rng(0)
    for _ in range(5):
        state = step(cfg, state, THETA, rng)
    np.testing.assert_array_equal(state.estimates, np.arange(16.0).reshape(8, 2))
    assert state.k == 5


def test_non_finite_estimate_aborts_with_diagnostics():
    cfg = pair_config()
    with pytest.raises(NonFiniteEstimate, match="sensor 1 at time k=1"):
        simulate(cfg, np.array([np.nan]), 5, seed=0)


def test_estimator_state_rejects_non_finite():
    with pytest.raises(ValueError):
        EstimatorState(0, np.array([[np.inf]]))


def test_fusion_conserves_network_sum():
    cfg = reference_config()
    rng = np.random.default_rng(1)
    runs = 4
    est = rng.standard_normal((runs, 8, 2))
    state = None
    worst = 0.0
    for k in range(1, 1001):
        out = advance(cfg, est, k, state, rng.random((runs, 1)), cfg.privacy_variates(rng, runs),
                      rng.standard_normal((runs, 8, 1)))
        worst = max(worst, float(np.abs(out.fusion.sum(axis=1)).max()))
        est, state = out.estimates, out.link_state
    assert worst <= 1e-12


# -- whole runs -------------------------------------------------------------------

def test_one_bit_per_live_neighbour():
    cfg = reference_config()
    res = simulate(cfg, THETA, 300, seed=2, runs=2, per_sensor=True)
    assert res.bits.sum() == 2 * res.live_edge_steps.sum()
    assert np.all(res.total_bits == res.bits.sum(axis=0))


def test_multi_bit_sends_one_bit_per_coordinate():
    one = simulate(highdim_config(True), np.zeros(12), 200, seed=3, runs=2)
    multi = simulate(highdim_config(False), np.zeros(12), 200, seed=3, runs=2)
    np.testing.assert_array_equal(one.live_edge_steps, multi.live_edge_steps)
    np.testing.assert_array_equal(multi.total_bits, 12 * one.total_bits)


def test_same_seed_same_errors():
    cfg = reference_config()
    a = simulate(cfg, THETA, 500, seed=4, runs=2)
    b = simulate(cfg, THETA, 500, seed=4, runs=2)
    np.testing.assert_array_equal(a.mean_sq_error, b.mean_sq_error)
    c = simulate(cfg, THETA, 500, seed=5, runs=2)
    assert not np.array_equal(a.mean_sq_error, c.mean_sq_error)


def test_runs_do_not_depend_on_batching():
    cfg = reference_config()
    together = simulate(cfg, THETA, 1500, seed=6, runs=3)
    for r in range(3):
        alone = simulate(cfg, THETA, 1500, seed=6, runs=1, run_offset=r)
        np.testing.assert_array_equal(alone.mean_sq_error[:, 0], together.mean_sq_error[:, r])


def test_compression_is_identity_in_one_dimension():
    a = simulate(pair_config().with_links(static_links([[0, 1], [1, 0]])), np.array([0.4]), 400, seed=7)
    cfg = pair_config()
    multi = AlgorithmConfig(cfg.links, cfg.sensors, cfg.noise, cfg.steps, 0.0, use_compression=False)
    b = simulate(multi, np.array([0.4]), 400, seed=7)
    np.testing.assert_array_equal(a.mean_sq_error, b.mean_sq_error)


def test_run_trace(tmp_path):
    res = run(reference_config(), THETA, 20, seed=8)
    assert res.sq_error.shape == (20, 8)
    res.write_csv(tmp_path / "trace.csv")
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "k,sensor,sq_error,bits_sent"
    assert len(lines) == 1 + 20 * 8


def test_noiseless_complete_graph_converges():
    n = 4
    links = static_links(np.ones((n, n)) - np.eye(n))
    sensors = SensorArray([SensorSpec.failing([[1.0, 0.0]] if i % 2 == 0 else [[0.0, 1.0]]) for i in range(n)])
    e = len(links.edges)
    cfg = AlgorithmConfig(links, sensors, [NoiseSchedule("gaussian")] * e,
                          StepSizeSchedule.uniform(e, n, 1.0, 0.8, 2.0))
    res = simulate(cfg, THETA, 10_000, seed=0, per_sensor=True)
    # threshold from a calibration run: worst sensor ended at 0.051 against 0.141
    assert np.sqrt(res.sq_error[-1, 0]).max() < math.sqrt(2) / 10


def test_reference_error_drops_from_early_to_mid_run():
    res = simulate(reference_config(), THETA, 10_000, seed=9, runs=100)
    early, late = res.mean_sq_error[99], res.mean_sq_error[9_999]
    se = math.hypot(early.std(ddof=1), late.std(ddof=1)) / 10
    assert early.mean() - late.mean() > 3 * se


def test_no_communication_plateaus():
    res = simulate(reference_config(communicate=False), THETA, 3000, seed=10, runs=4)
    # every sensor sees one coordinate, so the other never moves away from 0
    assert res.mean_sq_error[-1].min() > 0.5


# -- assumption checks ------------------------------------------------------------

def test_reference_config_passes_all_checks():
    report = validate_assumptions(reference_config())
    assert report.ok, report.lines()


def test_short_alpha_exponent_fails_square_summability():
    report = validate_assumptions(reference_config(gamma=0.4))
    assert "Σα² < ∞" in [c.name for c in report.failures()]


def test_fast_noise_growth_breaks_divergence():
    report = validate_assumptions(reference_config(noise_growth=0.3, gamma=0.8))
    failed = {c.name: c.detail for c in report.failures()}
    assert "Σz_k = ∞" in failed
    assert "γ + ε = 1.1 > 1" in failed["Σz_k = ∞"]


def test_disconnected_and_unobservable():
    links = static_links(np.zeros((2, 2)))
    sensors = SensorArray([SensorSpec.failing([[1.0, 0.0]]), SensorSpec.failing([[2.0, 0.0]])])
    cfg = AlgorithmConfig(links, sensors, [], StepSizeSchedule.uniform(0, 2, 1.0, 0.8, 0.2))
    names = {c.name for c in validate_assumptions(cfg).failures()}
    assert {"union graph connected", "cooperative observability"} <= names


def test_large_innovation_gain_breaks_privacy_condition():
    report = validate_assumptions(reference_config(beta_base=3.0, k0=2))
    failed = {c.name for c in report.failures()}
    assert "privacy condition β_k λmax(Q_i) < 1" in failed
