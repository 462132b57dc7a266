import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from volbench import stats as vs


# ------------------------------------------------------------------ sharpe

def test_sharpe_zero_mean():
    assert vs.sharpe([0.01, -0.01]) == 0.0


def test_sharpe_constant_series_errors():
    with pytest.raises(vs.StatsError, match="degenerate"):
        vs.sharpe([0.02, 0.02, 0.02])


def test_sharpe_hand_value():
    # mean 0.02, sample sd (ddof=1) 0.014142...; ratio = sqrt(2)
    assert vs.sharpe([0.01, 0.03]) == pytest.approx(1.4142135623730951, abs=1e-12)


@given(st.integers(0, 1000), st.floats(0.5, 20.0))
def test_sharpe_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(100) * 0.01 + 0.002
    assert vs.sharpe(c * x) == pytest.approx(vs.sharpe(x), rel=1e-10)


# -------------------------------------------------------------- volatility

def test_volatility_hand_values():
    assert vs.volatility([0.0, 0.02]) == pytest.approx(0.01414213562373095, abs=1e-15)
    assert vs.volatility([0.5, 0.5, 0.5]) == 0.0


def test_volatility_homogeneous():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(50)
    assert vs.volatility(2 * x) == pytest.approx(2 * vs.volatility(x), rel=1e-12)


# ---------------------------------------------------------------- lw test

def test_lw_identical_series():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(200) * 0.01 + 0.001
    res = vs.lw_sharpe_test(a, a.copy())
    assert res.delta == 0.0
    assert res.p_value == 1.0


def test_lw_shift_power():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(2000) * 0.01
    res = vs.lw_sharpe_test(a + 0.005, a)
    assert res.p_value < 0.01
    assert res.delta > 0


def test_lw_antisymmetry():
    rng = np.random.default_rng(2)
    a = rng.standard_normal(300) * 0.01 + 0.001
    b = rng.standard_normal(300) * 0.012 + 0.0005
    fwd = vs.lw_sharpe_test(a, b)
    rev = vs.lw_sharpe_test(b, a)
    assert fwd.delta == pytest.approx(-rev.delta, abs=1e-14)
    assert fwd.stat == pytest.approx(-rev.stat, abs=1e-12)
    assert fwd.p_value == pytest.approx(rev.p_value, abs=1e-12)


def test_lw_length_mismatch_and_minimum():
    with pytest.raises(vs.StatsError):
        vs.lw_sharpe_test(np.ones(60), np.ones(59))
    with pytest.raises(vs.StatsError):
        vs.lw_sharpe_test(np.arange(10.0), np.arange(10.0))


def test_lw_bootstrap_deterministic():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(120) * 0.01 + 0.002
    b = rng.standard_normal(120) * 0.01 + 0.001
    r1 = vs.lw_sharpe_test(a, b, bootstrap=True, bootstrap_reps=200, seed=42)
    r2 = vs.lw_sharpe_test(a, b, bootstrap=True, bootstrap_reps=200, seed=42)
    assert r1 == r2
    r3 = vs.lw_sharpe_test(a, b, bootstrap=True, bootstrap_reps=200, seed=43)
    assert 0.0 <= r3.p_value <= 1.0


# ---------------------------------------------------------- brown-forsythe

def test_bf_same_sample_twice():
    rng = np.random.default_rng(4)
    a = rng.standard_normal(100)
    res = vs.brown_forsythe(a, a.copy())
    assert res.f_star == 0.0
    assert res.p_value == 1.0


def test_bf_scale_shift_power():
    rng = np.random.default_rng(5)
    a = rng.standard_normal(1000)
    res = vs.brown_forsythe(a, 2 * rng.standard_normal(1000))
    assert res.p_value < 0.01


def test_bf_location_invariant():
    rng = np.random.default_rng(6)
    a = rng.standard_normal(200)
    b = rng.standard_normal(200) * 1.3
    base = vs.brown_forsythe(a, b)
    shifted = vs.brown_forsythe(a + 5.0, b - 2.0)
    assert base.f_star == pytest.approx(shifted.f_star, rel=1e-9)


def test_bf_matches_scipy_levene():
    sps = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(7)
    a = rng.standard_normal(80)
    b = rng.standard_normal(90) * 1.5
    ours = vs.brown_forsythe(a, b)
    ref_stat, ref_p = sps.levene(a, b, center="median")
    assert ours.f_star == pytest.approx(ref_stat, rel=1e-10)
    assert ours.p_value == pytest.approx(ref_p, rel=1e-10)


# --------------------------------------------------------- forecast errors

def test_forecast_errors_zero_when_constant():
    w = np.full((5, 3), 1 / 3)
    mu = np.array([0.01, 0.02, 0.03])
    r = np.tile(mu, (5, 1))
    np.testing.assert_allclose(vs.forecast_errors(w, r, mu), 0.0, atol=1e-15)


def test_forecast_errors_naive_algebra():
    rng = np.random.default_rng(8)
    r = rng.standard_normal((7, 4)) * 0.01
    mu = r.mean(axis=0)
    w = np.full((7, 4), 0.25)
    expected = r.mean(axis=1) - mu.mean()
    np.testing.assert_allclose(vs.forecast_errors(w, r, mu), expected, atol=1e-15)


def test_forecast_errors_hand_fixture():
    w = np.array([[0.5, 0.5], [0.25, 0.75]])
    r = np.array([[0.02, -0.02], [0.04, 0.0]])
    mu = np.array([0.01, 0.01])
    # e_t = w.r - w.mu computed by hand
    expected = np.array([0.0 - 0.01, 0.01 - 0.01])
    np.testing.assert_allclose(vs.forecast_errors(w, r, mu), expected, atol=1e-15)


def test_forecast_errors_shape_mismatch():
    with pytest.raises(vs.StatsError):
        vs.forecast_errors(np.ones((3, 2)), np.ones((3, 3)), np.ones(2))


# --------------------------------------------------------- diebold-mariano

def test_dm_identical_errors():
    rng = np.random.default_rng(9)
    e = rng.standard_normal(100)
    res = vs.diebold_mariano(e, e.copy())
    assert res.stat == 0.0
    assert res.p_value == 1.0


def test_dm_power():
    rng = np.random.default_rng(10)
    e = rng.standard_normal(1000)
    res = vs.diebold_mariano(e, 2 * rng.standard_normal(1000))
    assert res.p_value < 0.01
    assert res.stat < 0  # first series has smaller squared errors


def test_dm_swap_negates():
    rng = np.random.default_rng(11)
    a = rng.standard_normal(200)
    b = rng.standard_normal(200) * 1.1
    fwd = vs.diebold_mariano(a, b)
    rev = vs.diebold_mariano(b, a)
    assert fwd.stat == pytest.approx(-rev.stat, abs=1e-12)
    assert fwd.p_value == pytest.approx(rev.p_value, abs=1e-12)


# ------------------------------------------------------------- full report

def test_compare_with_benchmark_fields():
    rng = np.random.default_rng(12)
    k, n = 120, 3
    returns = rng.standard_normal((k, n)) * 0.01 + 0.001
    w_model = np.tile([0.5, 0.3, 0.2], (k, 1))
    w_naive = np.full((k, n), 1 / 3)
    gross = (w_model * returns).sum(axis=1)
    bench = (w_naive * returns).sum(axis=1)
    rep = vs.compare_with_benchmark(
        "COV", "MVP", gross, gross * 0.99, bench, bench * 0.99,
        weights=w_model, bench_weights=w_naive, asset_returns=returns,
    )
    assert rep.model_id == "COV"
    for p in (rep.p_sharpe, rep.p_sharpe_net, rep.p_vol_bf, rep.p_vol_dm):
        assert p is not None and 0.0 <= p <= 1.0
    assert rep.volatility >= 0
    assert rep.extra["naive_sharpe"] == pytest.approx(vs.sharpe(bench))
