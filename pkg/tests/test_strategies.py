import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from volbench import strategies as strat


def random_psd(n: int, rng: np.random.Generator, jitter: float = 1e-3) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return a @ a.T + jitter * np.eye(n)


# ---------------------------------------------------------------- oracles

def mvp_oracle_line_scan(sigma: np.ndarray) -> np.ndarray:
    """N=2 oracle: scan w1 over [-5, 6], refine locally to 1e-6 steps."""
    def objective(w1):
        w = np.array([w1, 1.0 - w1])
        return float(w @ sigma @ w)

    grid = np.arange(-5.0, 6.0, 1e-3)
    best = grid[np.argmin([objective(w) for w in grid])]
    fine = np.arange(best - 2e-3, best + 2e-3, 1e-6)
    best = fine[np.argmin([objective(w) for w in fine])]
    return np.array([best, 1.0 - best])


def tp_oracle_line_scan(mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """N=2 oracle: maximize mean/sd on the budget line."""
    def objective(w1):
        w = np.array([w1, 1.0 - w1])
        var = float(w @ sigma @ w)
        return -float(w @ mu) / math.sqrt(var)

    grid = np.arange(-5.0, 6.0, 1e-3)
    best = grid[np.argmin([objective(w) for w in grid])]
    fine = np.arange(best - 2e-3, best + 2e-3, 1e-6)
    best = fine[np.argmin([objective(w) for w in fine])]
    return np.array([best, 1.0 - best])


def con_mvp_oracle_enumerate(sigma: np.ndarray) -> np.ndarray:
    """Exhaustive active-set enumeration over all support sets."""
    n = sigma.shape[0]
    best_w, best_obj = None, np.inf
    for r in range(1, n + 1):
        for support in itertools.combinations(range(n), r):
            sub = sigma[np.ix_(support, support)]
            ones = np.ones(r)
            try:
                x = np.linalg.solve(sub, ones)
            except np.linalg.LinAlgError:
                continue
            denom = ones @ x
            if denom <= 0:
                continue
            w_sub = x / denom
            if np.any(w_sub < -1e-12):
                continue
            w = np.zeros(n)
            w[list(support)] = np.clip(w_sub, 0.0, None)
            w /= w.sum()
            obj = float(w @ sigma @ w)
            if obj < best_obj:
                best_obj, best_w = obj, w
    return best_w


def con_mvp_oracle_lattice(sigma: np.ndarray, step: float = 0.01) -> float:
    """Best objective over the 5-simplex lattice, then an exact refinement
    on the support of the winning lattice point."""
    assert sigma.shape == (5, 5)
    ticks = int(round(1.0 / step))
    best_obj, best_w = np.inf, None
    for a in range(ticks + 1):
        for b in range(ticks + 1 - a):
            m = ticks - a - b
            c_vals = np.arange(m + 1)
            counts = m + 1 - c_vals
            c = np.repeat(c_vals, counts)
            offsets = np.concatenate([[0], np.cumsum(counts[:-1])])
            d = np.arange(c.size) - np.repeat(offsets, counts)
            e = m - c - d
            w = np.column_stack(
                [np.full(c.size, a), np.full(c.size, b), c, d, e]
            ) * step
            objs = np.einsum("ij,jk,ik->i", w, sigma, w)
            i = int(np.argmin(objs))
            if objs[i] < best_obj:
                best_obj, best_w = float(objs[i]), w[i]
    support = np.where(best_w > 0)[0]
    sub = sigma[np.ix_(support, support)]
    ones = np.ones(support.size)
    x = np.linalg.solve(sub, ones)
    if ones @ x > 0:
        w_ref = x / (ones @ x)
        if w_ref.min() >= 0:
            full = np.zeros(5)
            full[support] = w_ref
            best_obj = min(best_obj, float(full @ sigma @ full))
    return best_obj


# ------------------------------------------------------------------ naive

def test_naive_examples():
    np.testing.assert_array_equal(
        strat.naive_weights(4).weights, np.full(4, 0.25)
    )
    np.testing.assert_array_equal(strat.naive_weights(1).weights, np.array([1.0]))
    assert math.fsum(strat.naive_weights(3).weights) == 1.0


# -------------------------------------------------------------------- mvp

def test_mvp_identity():
    w = strat.mvp_weights(np.eye(2)).weights
    np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-14)


def test_mvp_diagonal_inverse_variance():
    w = strat.mvp_weights(np.diag([1.0, 4.0])).weights
    np.testing.assert_allclose(w, [0.8, 0.2], atol=1e-14)


def test_mvp_matches_line_scan_oracle():
    sigma = np.array([[1.0, 0.3], [0.3, 2.0]])
    w = strat.mvp_weights(sigma).weights
    oracle = mvp_oracle_line_scan(sigma)
    np.testing.assert_allclose(w, oracle, atol=1e-5)


def test_mvp_degenerate_error():
    sigma = np.full((2, 2), 1.0)  # singular: ones direction only
    with pytest.raises(strat.StrategyError):
        strat.mvp_weights(sigma)


# ---------------------------------------------------------------- con-mvp

def test_con_mvp_identity_is_naive():
    w = strat.con_mvp_weights(np.eye(3)).weights
    np.testing.assert_allclose(w, np.full(3, 1 / 3), atol=1e-12)


def test_con_mvp_boundary_solution():
    sigma = np.array([[0.04, 0.034], [0.034, 0.03]])
    assert strat.mvp_weights(sigma).weights[0] < 0  # unconstrained shorts asset 1
    w = strat.con_mvp_weights(sigma).weights
    oracle = con_mvp_oracle_enumerate(sigma)
    np.testing.assert_allclose(w, oracle, atol=1e-10)
    np.testing.assert_allclose(w, [0.0, 1.0], atol=1e-10)


def test_con_mvp_matches_enumeration():
    rng = np.random.default_rng(123)
    for _ in range(10):
        sigma = random_psd(5, rng)
        w = strat.con_mvp_weights(sigma).weights
        obj = float(w @ sigma @ w)
        oracle = con_mvp_oracle_enumerate(sigma)
        assert abs(obj - float(oracle @ sigma @ oracle)) <= 1e-8


def test_con_mvp_matches_simplex_lattice_with_refinement():
    sigma = random_psd(5, np.random.default_rng(2024))
    w = strat.con_mvp_weights(sigma).weights
    obj = float(w @ sigma @ w)
    assert abs(obj - con_mvp_oracle_lattice(sigma, step=0.01)) <= 1e-8


def test_con_mvp_kkt_certificate():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 9))
        sigma = random_psd(n, rng)
        w = strat.con_mvp_weights(sigma).weights
        grad = sigma @ w
        lam = float(w @ grad)
        assert np.all(grad[w == 0.0] >= lam - 1e-8)
        np.testing.assert_allclose(grad[w > 0.0], lam, atol=1e-8)


def test_con_mvp_equals_mvp_when_interior():
    sigma = np.diag([1.0, 2.0, 3.0])
    np.testing.assert_allclose(
        strat.con_mvp_weights(sigma).weights,
        strat.mvp_weights(sigma).weights,
        atol=1e-12,
    )


# --------------------------------------------------------------------- vt

def test_vt_examples():
    np.testing.assert_allclose(
        strat.vt_weights(np.eye(3)).weights, np.full(3, 1 / 3), atol=1e-14
    )
    np.testing.assert_allclose(
        strat.vt_weights(np.diag([1.0, 4.0])).weights, [0.8, 0.2], atol=1e-14
    )


def test_vt_ignores_off_diagonals():
    with_corr = np.array([[1.0, 0.9], [0.9, 4.0]])
    np.testing.assert_array_equal(
        strat.vt_weights(with_corr).weights,
        strat.vt_weights(np.diag([1.0, 4.0])).weights,
    )


def test_vt_nonpositive_diagonal_error():
    with pytest.raises(strat.StrategyError):
        strat.vt_weights(np.diag([1.0, 0.0]))


# --------------------------------------------------------------------- tp

def test_tp_proportional_to_mu_under_identity():
    w = strat.tp_weights(np.array([2.0, 1.0]), np.eye(2)).weights
    np.testing.assert_allclose(w, [2 / 3, 1 / 3], atol=1e-14)


def test_tp_mu_equal_sigma_times_one_gives_naive():
    sigma = np.array([[1.0, 0.2], [0.2, 2.0]])
    mu = sigma @ np.ones(2)
    np.testing.assert_allclose(
        strat.tp_weights(mu, sigma).weights, [0.5, 0.5], atol=1e-12
    )


def test_tp_matches_line_scan_oracle():
    sigma = np.array([[1.0, 0.3], [0.3, 2.0]])
    mu = np.array([0.05, 0.10])
    w = strat.tp_weights(mu, sigma).weights
    oracle = tp_oracle_line_scan(mu, sigma)
    np.testing.assert_allclose(w, oracle, atol=1e-5)


def test_tp_negative_normalizer_flagged_not_corrected():
    sigma = np.eye(2)
    mu = np.array([-1.0, -2.0])
    wv = strat.tp_weights(mu, sigma)
    assert wv.diagnostics["negative_normalizer"]
    assert wv.weights.sum() == pytest.approx(1.0)


def test_tp_undefined_error():
    with pytest.raises(strat.StrategyError, match="tangency undefined"):
        strat.tp_weights(np.array([1.0, -1.0]), np.eye(2))


# ------------------------------------------------------------- properties

@given(st.integers(0, 10_000), st.integers(2, 8))
def test_all_weights_sum_to_one(seed, n):
    rng = np.random.default_rng(seed)
    sigma = random_psd(n, rng)
    mu = rng.standard_normal(n) * 0.05
    for sid in strat.STRATEGY_IDS:
        try:
            w = strat.strategy_weights(sid, mu, sigma).weights
        except strat.StrategyError:
            continue
        assert abs(w.sum() - 1.0) <= 1e-10
        if sid in strat.LONG_ONLY:
            assert w.min() >= -1e-12


@given(st.integers(0, 10_000), st.floats(0.1, 50.0))
def test_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    sigma = random_psd(4, rng)
    mu = rng.standard_normal(4) * 0.05 + 0.1
    np.testing.assert_allclose(
        strat.mvp_weights(c * sigma).weights,
        strat.mvp_weights(sigma).weights,
        atol=1e-9,
    )
    np.testing.assert_allclose(
        strat.vt_weights(c * sigma).weights,
        strat.vt_weights(sigma).weights,
        atol=1e-9,
    )
    try:
        base = strat.tp_weights(mu, sigma).weights
        scaled = strat.tp_weights(c * mu, sigma).weights
        np.testing.assert_allclose(scaled, base, atol=1e-9)
    except strat.StrategyError:
        pass


@given(st.integers(0, 10_000))
def test_objective_ordering(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    sigma = random_psd(n, rng)
    var_mvp = strat.mvp_weights(sigma).weights @ sigma @ strat.mvp_weights(sigma).weights
    w_con = strat.con_mvp_weights(sigma).weights
    var_con = w_con @ sigma @ w_con
    w_naive = strat.naive_weights(n).weights
    var_naive = w_naive @ sigma @ w_naive
    assert var_mvp <= var_con + 1e-12
    assert var_con <= var_naive + 1e-12


def test_con_mvp_equals_mvp_when_mvp_nonnegative():
    rng = np.random.default_rng(99)
    found = 0
    while found < 10:
        sigma = random_psd(4, rng)
        w_mvp = strat.mvp_weights(sigma).weights
        if w_mvp.min() >= 0:
            found += 1
            np.testing.assert_allclose(
                strat.con_mvp_weights(sigma).weights, w_mvp, atol=1e-9
            )
