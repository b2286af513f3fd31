import math

import numpy as np
import pytest

from copolab.disorder import (
    BINARY,
    GAUSSIAN,
    DisorderLaw,
    LawKind,
    TiltParams,
    log_mgf,
    log_mgf_prime,
    q1,
    q2,
    rate_function,
    sample,
    sample_tilted,
)


def test_log_mgf_gaussian_closed_form():
    assert log_mgf(GAUSSIAN, 0.5) == pytest.approx(0.125, abs=1e-15)


def test_log_mgf_zero_is_zero():
    for law in (GAUSSIAN, BINARY):
        assert log_mgf(law, 0.0) == 0.0


def test_log_mgf_binary_log_cosh():
    # high-precision evaluation of log cosh(1)
    expected = math.log(math.cosh(1.0))
    assert log_mgf(BINARY, 1.0) == pytest.approx(expected, abs=1e-14)


def test_log_mgf_domain_error():
    capped = DisorderLaw(LawKind.SYMMETRIC_BINARY, beta_bar=1.0)
    with pytest.raises(ValueError):
        log_mgf(capped, 1.0)
    with pytest.raises(ValueError):
        log_mgf(GAUSSIAN, -0.1)


def test_q1_q2_gaussian_exact():
    for beta in [0.25, 0.7, 1.3, 2.0]:
        assert q1(GAUSSIAN, beta) == pytest.approx(beta**2 / 2, rel=1e-14)
        assert q2(GAUSSIAN, beta) == pytest.approx(beta**2, rel=1e-14)


def test_q1_q2_small_beta_expansion():
    # q1 = beta^2/2 + O(beta^3), q2 = beta^2 + O(beta^3) for both laws
    for law in (GAUSSIAN, BINARY):
        for beta in [1e-2, 1e-3]:
            assert abs(q1(law, beta) - beta**2 / 2) <= 5 * beta**3
            assert abs(q2(law, beta) - beta**2) <= 5 * beta**3


def test_q1_binary_closed_form_and_numeric_derivative():
    # closed form at beta=1, cross-checked by a central difference of log_mgf
    expected = math.tanh(1.0) - math.log(math.cosh(1.0))
    assert q1(BINARY, 1.0) == pytest.approx(expected, abs=1e-14)
    step = 1e-5
    numeric = (log_mgf(BINARY, 1.0 + step) - log_mgf(BINARY, 1.0 - step)) / (2 * step)
    assert numeric == pytest.approx(log_mgf_prime(BINARY, 1.0), abs=1e-6)


def test_q2_infinite_branch_with_injected_cap():
    capped = DisorderLaw(LawKind.SYMMETRIC_BINARY, beta_bar=1.0)
    assert math.isinf(q2(capped, 0.6))
    assert math.isfinite(q2(capped, 0.4))


def test_positivity_of_q1_q2():
    for law in (GAUSSIAN, BINARY):
        for beta in [0.1, 0.5, 1.5]:
            assert q1(law, beta) > 0
            assert q2(law, beta) > 0


def test_rate_function_gaussian_quadratic():
    for x in np.linspace(0.0, 3.0, 13):
        ev = rate_function(GAUSSIAN, float(x))
        assert ev.sigma == pytest.approx(x**2 / 2, abs=1e-10)


def test_rate_function_zero_case():
    for law in (GAUSSIAN, BINARY):
        ev = rate_function(law, 0.0)
        assert ev.sigma == 0.0 and ev.argmax_y == 0.0


def test_rate_function_binary_entropy_and_grid_oracle():
    x = 0.5
    closed = (1.5 / 2) * math.log(1.5) + (0.5 / 2) * math.log(0.5)
    # independent oracle: grid search of x*y - log cosh(y)
    ys = np.linspace(0.0, 5.0, 2_000_001)
    grid_max = float(np.max(x * ys - np.log(np.cosh(ys))))
    assert grid_max == pytest.approx(closed, abs=1e-10)
    ev = rate_function(BINARY, x)
    assert ev.sigma == pytest.approx(closed, abs=1e-10)


def test_rate_function_domain_errors():
    with pytest.raises(ValueError):
        rate_function(BINARY, 1.0)
    with pytest.raises(ValueError):
        rate_function(GAUSSIAN, -0.5)


def test_rate_function_stationarity_identity():
    for law in (GAUSSIAN, BINARY):
        for x in [0.1, 0.4, 0.8]:
            ev = rate_function(law, x)
            assert ev.sigma == pytest.approx(
                x * ev.argmax_y - log_mgf(law, ev.argmax_y), abs=1e-12
            )


def test_legendre_consistency_sigma_of_slope_is_q1():
    # rate function evaluated at the cumulant slope returns q1
    for law in (GAUSSIAN, BINARY):
        for beta in np.linspace(0.05, 2.0, 15):
            slope = log_mgf_prime(law, float(beta))
            assert rate_function(law, slope).sigma == pytest.approx(
                q1(law, float(beta)), abs=1e-8
            )


def test_log_mgf_convexity_on_grid():
    grid = np.linspace(0.0, 2.5, 60)
    for law in (GAUSSIAN, BINARY):
        vals = np.array([log_mgf(law, float(b)) for b in grid])
        second = np.diff(vals, 2)
        assert second.min() >= -1e-9


def test_numeric_derivative_matches_analytic():
    step = 1e-5
    for law in (GAUSSIAN, BINARY):
        for beta in [0.3, 1.0, 1.7]:
            numeric = (log_mgf(law, beta + step) - log_mgf(law, beta - step)) / (2 * step)
            assert numeric == pytest.approx(log_mgf_prime(law, beta), abs=1e-6)


def test_sample_determinism():
    for law in (GAUSSIAN, BINARY):
        a = sample(law, 50, seed=123)
        b = sample(law, 50, seed=123)
        np.testing.assert_array_equal(a, b)


def test_sample_normalization_moments():
    for law in (GAUSSIAN, BINARY):
        draws = sample(law, 200_000, seed=7)
        assert abs(draws.mean()) < 0.01
        assert abs(draws.var() - 1.0) < 0.02


def test_tilted_gaussian_mean():
    beta = 0.8
    draws = sample_tilted(GAUSSIAN, TiltParams(beta), 1_000_000, seed=11)
    stderr = draws.std() / math.sqrt(len(draws))
    assert abs(draws.mean() - beta) <= 4 * stderr


def test_tilted_binary_frequency():
    beta = 0.6
    draws = sample_tilted(BINARY, TiltParams(beta), 500_000, seed=13)
    p_plus = math.exp(beta) / (2 * math.cosh(beta))
    freq = (draws > 0).mean()
    stderr = math.sqrt(p_plus * (1 - p_plus) / len(draws))
    assert abs(freq - p_plus) <= 4 * stderr


def test_zero_tilt_matches_untilted():
    a = sample_tilted(BINARY, TiltParams(0.0), 100, seed=5)
    b = sample(BINARY, 100, seed=5)
    np.testing.assert_array_equal(a, b)


def test_tilted_block_means_exceed_shifted_threshold():
    # under the tilt, the frequency of block sums above b*slope*k grows past 1/2
    beta, b_frac, k = 1.0, 0.9, 400
    for law in (GAUSSIAN, BINARY):
        draws = sample_tilted(law, TiltParams(beta), k * 500, seed=17).reshape(500, k)
        threshold = b_frac * log_mgf_prime(law, beta) * k
        assert (draws.sum(axis=1) >= threshold).mean() > 0.5
