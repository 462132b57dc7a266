import numpy as np
import pytest

from volbench import simulate
from volbench.estimators import EstimationError
from volbench.estimators.varmodels import (
    johansen_rank,
    johansen_trace,
    var_fit,
    vecm_fit,
)


class TestVarFit:
    def test_invalid_order(self):
        with pytest.raises(EstimationError, match="invalid VAR order"):
            var_fit(np.zeros((100, 2)), 0)

    def test_insufficient_history(self):
        with pytest.raises(EstimationError, match="insufficient history"):
            var_fit(np.random.default_rng(0).standard_normal((5, 2)), 2)

    def test_white_noise_coefficients_near_zero(self):
        rng = np.random.default_rng(1)
        window = rng.standard_normal((2000, 3)) * 0.01
        fit = var_fit(window, 2)
        assert np.all(np.abs(fit.coefficients) < 4.0 * fit.coefficient_se)
        sample = np.cov(window, rowvar=False)
        np.testing.assert_allclose(
            fit.residual_cov, sample, rtol=0.05, atol=0.02 * np.trace(sample) / 3
        )

    def test_known_var2_recovery(self):
        rng = np.random.default_rng(2)
        a1 = np.array([[0.4, 0.1], [0.0, 0.3]])
        a2 = np.array([[0.1, 0.0], [0.05, 0.15]])
        intercept = np.array([0.02, -0.01])
        data = simulate.var_path(intercept, [a1, a2], 0.1 * np.eye(2), 2000, rng)
        fit = var_fit(data, 2)
        assert np.all(np.abs(fit.coefficients[0] - a1) < 3.0 * fit.coefficient_se[0])
        assert np.all(np.abs(fit.coefficients[1] - a2) < 3.0 * fit.coefficient_se[1])

    def test_one_step_mean_definition(self):
        rng = np.random.default_rng(3)
        window = rng.standard_normal((300, 2))
        fit = var_fit(window, 2)
        expected = (
            fit.intercept
            + fit.coefficients[0] @ window[-1]
            + fit.coefficients[1] @ window[-2]
        )
        np.testing.assert_allclose(fit.one_step_mean, expected, atol=1e-12)

    def test_residual_cov_divisor(self):
        rng = np.random.default_rng(4)
        window = rng.standard_normal((150, 2))
        fit = var_fit(window, 2)
        # recompute with the explicit divisor M - N*p - 1
        m, n, p = 150, 2, 2
        x = np.column_stack(
            [np.ones(m - p), window[1 : m - 1], window[0 : m - 2]]
        )
        beta, *_ = np.linalg.lstsq(x, window[p:], rcond=None)
        resid = window[p:] - x @ beta
        np.testing.assert_allclose(
            fit.residual_cov, resid.T @ resid / (m - n * p - 1), atol=1e-10
        )


class TestJohansen:
    def test_trace_stats_decreasing(self):
        rng = np.random.default_rng(5)
        data = simulate.random_walks(3, 500, rng)
        _, stats = johansen_trace(data, 2)
        assert np.all(np.diff(stats) < 0)

    def test_independent_random_walks_rank_zero(self):
        hits = 0
        for seed in range(30):
            rng = np.random.default_rng(100 + seed)
            data = simulate.random_walks(2, 1000, rng)
            hits += johansen_rank(data, 2) == 0
        assert hits >= 27  # >= 90%

    def test_common_trend_rank_one(self):
        hits = 0
        for seed in range(30):
            rng = np.random.default_rng(200 + seed)
            data = simulate.common_trend_pair(1000, rng)
            hits += johansen_rank(data, 2) == 1
        assert hits >= 27

    def test_stationary_full_rank(self):
        hits = 0
        for seed in range(30):
            rng = np.random.default_rng(300 + seed)
            data = simulate.var_path(
                np.zeros(2), [0.3 * np.eye(2)], np.eye(2), 1000, rng
            )
            hits += johansen_rank(data, 2) == 2
        assert hits >= 27


class TestVecm:
    def test_rank_zero_equals_differenced_var(self):
        rng = np.random.default_rng(6)
        data = simulate.random_walks(2, 800, rng)
        fit = vecm_fit(data, 2, rank=0)
        ref = var_fit(np.diff(data, axis=0), 1)
        np.testing.assert_allclose(fit.residual_cov, ref.residual_cov, atol=1e-12)
        np.testing.assert_allclose(
            fit.one_step_mean, data[-1] + ref.one_step_mean, atol=1e-12
        )

    def test_rank_n_equals_levels_var(self):
        rng = np.random.default_rng(7)
        data = simulate.var_path(
            np.full(2, 0.1), [0.4 * np.eye(2)], np.eye(2), 600, rng
        )
        fit = vecm_fit(data, 2, rank=2)
        ref = var_fit(data, 2)
        np.testing.assert_array_equal(fit.residual_cov, ref.residual_cov)
        np.testing.assert_array_equal(fit.one_step_mean, ref.one_step_mean)

    def test_cointegrated_adjustment_recovery(self):
        # y1 error-corrects toward y2 with loading -0.2
        hits = 0
        for seed in range(10):
            rng = np.random.default_rng(400 + seed)
            n = 2000
            y = np.zeros((n, 2))
            for t in range(1, n):
                ect = y[t - 1, 0] - y[t - 1, 1]
                y[t, 0] = y[t - 1, 0] - 0.2 * ect + 0.5 * rng.standard_normal()
                y[t, 1] = y[t - 1, 1] + 0.05 * ect + 0.5 * rng.standard_normal()
            fit = vecm_fit(y, 2, rank=1)
            beta = fit.beta[:, 0]
            alpha = fit.alpha[:, 0] * beta[0]  # normalize beta_1 = +1
            beta = beta / beta[0]
            se = fit.alpha_se[:, 0] * abs(beta[0])
            ok = abs(alpha[0] - (-0.2)) < 3 * se[0] and abs(alpha[1] - 0.05) < 3 * se[1]
            hits += ok
        assert hits >= 8

    def test_auto_rank_dispatch(self):
        rng = np.random.default_rng(8)
        data = simulate.common_trend_pair(1500, rng)
        fit = vecm_fit(data, 2)
        assert fit.rank in (0, 1, 2)
