import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from privquant.noise_models import Family, NoiseSchedule, eta_numeric, schedule_feasible, stack_scales

FAMILIES = list(Family)
CLOSED_ETA = {Family.GAUSSIAN: 2 / math.pi, Family.LAPLACE: 1.0, Family.CAUCHY: 4 / math.pi ** 2}


def test_density_examples():
    assert NoiseSchedule(Family.GAUSSIAN).density(1, 0.0) == pytest.approx(0.3989423, abs=1e-7)
    assert NoiseSchedule(Family.LAPLACE, 2.0).density(1, 0.0) == pytest.approx(0.25)
    assert NoiseSchedule(Family.CAUCHY).density(1, 1.0) == pytest.approx(0.1591549, abs=1e-7)


@pytest.mark.parametrize("family", FAMILIES)
def test_cdf_is_half_at_zero(family):
    assert NoiseSchedule(family, 1.7, 0.2).cdf(9, 0.0) == 0.5


def test_cdf_examples():
    assert NoiseSchedule(Family.CAUCHY).cdf(1, 1.0) == pytest.approx(0.75)
    assert NoiseSchedule(Family.GAUSSIAN).cdf(1, 1.959964) == pytest.approx(0.975, abs=1e-6)


@pytest.mark.parametrize("family", FAMILIES)
def test_eta_at_unit_scale(family):
    assert NoiseSchedule(family).eta(1) == pytest.approx(CLOSED_ETA[family], rel=1e-12)


def test_eta_numeric_gaussian():
    est = eta_numeric(NoiseSchedule(Family.GAUSSIAN), 1, 10.0, 100_001)
    assert abs(est.value - 2 / math.pi) <= 1e-6
    assert not est.coarse_grid


@pytest.mark.parametrize("family", [Family.LAPLACE, Family.CAUCHY])
def test_eta_numeric_attained_at_origin(family):
    est = eta_numeric(NoiseSchedule(family), 1, 10.0, 100_001)
    assert est.argmax == 0.0
    assert est.value == pytest.approx(CLOSED_ETA[family], rel=1e-12)


def test_eta_numeric_flags_coarse_grid():
    assert eta_numeric(NoiseSchedule(Family.GAUSSIAN), 1, 5.0, 101).coarse_grid


def test_zeta_examples():
    assert NoiseSchedule(Family.GAUSSIAN).zeta(123) == 1.0
    assert NoiseSchedule(Family.GAUSSIAN, 1.0, 0.15).zeta(100) == pytest.approx(0.5012, abs=1e-4)
    assert NoiseSchedule(Family.GAUSSIAN, 1.0, 0.5).zeta(4) == pytest.approx(0.5)


def test_schedule_feasible():
    assert schedule_feasible(0.15)
    assert schedule_feasible(0.5)
    assert not schedule_feasible(0.6)


@pytest.mark.parametrize("kw", [dict(base_scale=0.0), dict(base_scale=-1.0), dict(growth_exponent=-0.1)])
def test_invalid_schedule(kw):
    with pytest.raises(ValueError):
        NoiseSchedule(Family.GAUSSIAN, **kw)


def test_stack_scales():
    s = [NoiseSchedule(Family.GAUSSIAN, 2.0, 0.5), NoiseSchedule(Family.CAUCHY, 1.0, 0.0)]
    np.testing.assert_allclose(stack_scales(s, 4), [4.0, 1.0])


# -- sampling --------------------------------------------------------------------

def test_gaussian_draws_pass_ks():
    s = NoiseSchedule(Family.GAUSSIAN, 1.5, 0.2)
    x = s.sample(7, np.random.default_rng(0), 100_000)
    d = stats.kstest(x, lambda v: s.cdf(7, v)).statistic
    assert d < 1.95 / math.sqrt(len(x))       # asymptotic 0.001 critical value


def test_laplace_median_near_zero():
    x = NoiseSchedule(Family.LAPLACE).sample(1, np.random.default_rng(1), 100_000)
    assert abs(np.median(x)) <= 0.02


def test_cauchy_fraction_below_scale():
    x = NoiseSchedule(Family.CAUCHY).sample(1, np.random.default_rng(2), 100_000)
    assert abs(np.mean(x <= 1.0) - 0.75) <= 0.01


# -- properties ------------------------------------------------------------------

@pytest.mark.parametrize("family", [Family.GAUSSIAN, Family.LAPLACE])
def test_density_integrates_to_one(family):
    s = NoiseSchedule(family, 1.3, 0.1)
    total, _ = integrate.quad(lambda x: s.density(5, x), -np.inf, np.inf, epsabs=1e-12)
    assert abs(total - 1) <= 1e-6


def test_cauchy_mass_approaches_one():
    s = NoiseSchedule(Family.CAUCHY, 0.7)
    x = 1e6 * 0.7
    assert abs(s.cdf(1, x) - s.cdf(1, -x) - 1) <= 1e-5


scales = st.floats(0.05, 20.0)
exps = st.floats(0.0, 0.5)
times = st.integers(1, 10**6)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), scales, exps, times,
       st.lists(st.floats(-50, 50), min_size=2, max_size=30))
def test_cdf_monotone_and_symmetric(family, b, eps, k, xs):
    s = NoiseSchedule(family, b, eps)
    xs = np.sort(np.asarray(xs))
    f = s.cdf(k, xs)
    assert np.all(np.diff(f) >= 0)
    np.testing.assert_allclose(s.cdf(k, -xs), 1 - f, atol=1e-12, rtol=0)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), scales, exps, times, times)
def test_eta_scales_inverse_square(family, b, eps, k1, k2):
    s = NoiseSchedule(family, b, eps)
    a, c = s.eta(k1) * s.scale(k1) ** 2, s.eta(k2) * s.scale(k2) ** 2
    assert a == pytest.approx(c, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(FAMILIES), scales, exps, times)
def test_zeta_times_scale_is_base(family, b, eps, k):
    s = NoiseSchedule(family, b, eps)
    assert s.zeta(k) * s.scale(k) == pytest.approx(b, rel=1e-12)
    c = s.constants(k)
    assert math.isfinite(c.eta) and c.eta > 0 and 0 < c.zeta <= 1


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(FAMILIES), scales, exps, st.integers(1, 1000))
def test_eta_numeric_never_exceeds_closed_form(family, b, eps, k):
    s = NoiseSchedule(family, b, eps)
    h = 20 * float(s.scale(k))
    est = eta_numeric(s, k, h, 100_001)
    assert est.value <= s.eta(k) * (1 + 1e-9)
    assert s.eta(k) - est.value <= 1e-4 * s.eta(k)
