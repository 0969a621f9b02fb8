import math

import numpy as np
import pytest
from scipy import stats

from dpsketch.sketches.dp_mechanism import (
    PrivacyBudget,
    PrivacyParamsError,
    calibrate_sigma,
    compose,
    l2_sensitivity,
    noise_bound_E,
    sample_gaussian,
    split_budget,
    zcdp_to_dp,
)


@pytest.mark.parametrize("d, expected", [(8, 4.0), (2, 2.0), (6, math.sqrt(12))])
def test_l2_sensitivity(d, expected):
    assert l2_sensitivity(d) == pytest.approx(expected, rel=1e-12)


def test_calibrate_sigma_examples():
    assert calibrate_sigma(6, PrivacyBudget(1.0)) == pytest.approx(2.449489742783178)
    assert calibrate_sigma(1, PrivacyBudget(0.5)) == pytest.approx(math.sqrt(2))
    assert calibrate_sigma(5, PrivacyBudget(4.0)) == pytest.approx(calibrate_sigma(5, PrivacyBudget(1.0)) / 2)


def test_calibration_identity_over_grid():
    rng = np.random.default_rng(0)
    for d, rho in zip(rng.integers(1, 50, size=100), rng.uniform(0.01, 20.0, size=100)):
        sigma = calibrate_sigma(int(d), PrivacyBudget(float(rho)))
        assert sigma ** 2 * 2 * rho == pytest.approx(l2_sensitivity(int(d)) ** 2, rel=1e-12)


def test_sigma_needs_positive_rho():
    with pytest.raises(PrivacyParamsError):
        calibrate_sigma(3, PrivacyBudget(0.0))
    with pytest.raises(PrivacyParamsError):
        PrivacyBudget(-1.0)
    with pytest.raises(PrivacyParamsError):
        calibrate_sigma(0, PrivacyBudget(1.0))


def test_infinite_budget_means_no_noise():
    assert calibrate_sigma(6, PrivacyBudget(math.inf)) == 0.0
    assert noise_bound_E(6, 100, 0.01, PrivacyBudget(math.inf)) == 0.0


def test_noise_bound_example():
    e = noise_bound_E(6, 100, 0.01, PrivacyBudget(1.0))
    assert e == pytest.approx(math.sqrt(6) * math.sqrt(2 * math.log(240_000)))
    assert 12.19 <= e < 12.20
    assert noise_bound_E(6, 100, 0.01, PrivacyBudget(4.0)) == pytest.approx(e / 2)


def test_noise_bound_domain_errors():
    with pytest.raises(PrivacyParamsError):
        noise_bound_E(6, 0, 0.01, PrivacyBudget(1.0))
    with pytest.raises(PrivacyParamsError):
        noise_bound_E(6, 100, 1.5, PrivacyBudget(1.0))


def test_zcdp_to_dp_examples():
    assert zcdp_to_dp(PrivacyBudget(0.0), 1e-6) == 0.0
    assert zcdp_to_dp(PrivacyBudget(0.1), 1e-6) == pytest.approx(2.4508, abs=1e-3)
    assert zcdp_to_dp(PrivacyBudget(1.0), 1e-5) == pytest.approx(7.7871, abs=1e-3)
    with pytest.raises(PrivacyParamsError):
        zcdp_to_dp(PrivacyBudget(1.0), 0.0)


def test_epsilon_monotone_in_rho_and_delta():
    assert zcdp_to_dp(PrivacyBudget(0.5), 1e-6) < zcdp_to_dp(PrivacyBudget(1.0), 1e-6)
    assert zcdp_to_dp(PrivacyBudget(1.0), 1e-3) < zcdp_to_dp(PrivacyBudget(1.0), 1e-6)


def test_split_and_compose():
    assert split_budget(PrivacyBudget(1.0), 16).rho == 0.0625
    assert split_budget(PrivacyBudget(10.0), 32).rho == 0.3125
    assert split_budget(PrivacyBudget(0.7), 1).rho == 0.7
    with pytest.raises(PrivacyParamsError):
        split_budget(PrivacyBudget(1.0), 0)
    parts = [split_budget(PrivacyBudget(1.0), 16)] * 16
    assert compose(*parts).rho == pytest.approx(1.0)
    assert (PrivacyBudget(0.25) + PrivacyBudget(0.5)).rho == 0.75


def test_sample_gaussian_degenerate_and_deterministic():
    rng = np.random.default_rng(1)
    assert sample_gaussian(rng, 3.5, 0.0) == 3.5
    assert np.all(sample_gaussian(rng, 2.0, 0.0, size=(2, 3)) == 2.0)
    a = sample_gaussian(np.random.default_rng(5), 0.0, 1.0, size=100)
    b = sample_gaussian(np.random.default_rng(5), 0.0, 1.0, size=100)
    assert np.array_equal(a, b)
    with pytest.raises(PrivacyParamsError):
        sample_gaussian(rng, 0.0, -1.0)


def test_sample_gaussian_variance():
    draws = sample_gaussian(np.random.default_rng(11), 0.0, 2.0, size=1_000_000)
    assert 3.97 <= draws.var() <= 4.03
    _, p = stats.normaltest(draws[:5000])
    assert p > 1e-4
