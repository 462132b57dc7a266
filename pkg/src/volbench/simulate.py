"""Seeded data generators for recovery tests and experiments."""
from __future__ import annotations

import numpy as np


def garch11_path(
    omega: float, alpha: float, beta: float, n: int, rng: np.random.Generator,
    burn: int = 500,
) -> np.ndarray:
    """Simulate a Gaussian GARCH(1,1) return series."""
    s2 = omega / (1.0 - alpha - beta)
    out = np.empty(n + burn)
    for t in range(n + burn):
        e = rng.standard_normal() * np.sqrt(s2)
        out[t] = e
        s2 = omega + alpha * e * e + beta * s2
    return out[burn:]


def dcc_path(
    garch_params: list[tuple[float, float, float]],
    a: float,
    b: float,
    corr_target: np.ndarray,
    n: int,
    rng: np.random.Generator,
    burn: int = 500,
) -> np.ndarray:
    """Simulate DCC-GARCH returns with targeting intercept (1-a-b) R̄."""
    k = len(garch_params)
    qbar = np.asarray(corr_target, dtype=float)
    q = qbar.copy()
    s2 = np.array([w / (1.0 - al - be) for w, al, be in garch_params])
    z_prev = np.zeros(k)
    out = np.empty((n + burn, k))
    for t in range(n + burn):
        q = (1.0 - a - b) * qbar + a * np.outer(z_prev, z_prev) + b * q
        d = np.sqrt(np.diag(q))
        r = q / np.outer(d, d)
        np.fill_diagonal(r, 1.0)
        z = np.linalg.cholesky(r) @ rng.standard_normal(k)
        eps = z * np.sqrt(s2)
        out[t] = eps
        for i, (w, al, be) in enumerate(garch_params):
            s2[i] = w + al * eps[i] ** 2 + be * s2[i]
        z_prev = z
    return out[burn:]


def bekk_path(
    c: np.ndarray, a: np.ndarray, b: np.ndarray, n: int, rng: np.random.Generator,
    burn: int = 500,
) -> np.ndarray:
    """Simulate BEKK(1,1) returns H_t = CC' + A ee'A' + B H B'."""
    k = c.shape[0]
    cc = c @ c.T
    vec_unc = np.linalg.solve(
        np.eye(k * k) - np.kron(a, a) - np.kron(b, b), cc.reshape(-1)
    )
    h = vec_unc.reshape(k, k)
    eps = np.zeros(k)
    out = np.empty((n + burn, k))
    for t in range(n + burn):
        h = cc + a @ np.outer(eps, eps) @ a.T + b @ h @ b.T
        eps = np.linalg.cholesky(h) @ rng.standard_normal(k)
        out[t] = eps
    return out[burn:]


def var_path(
    intercept: np.ndarray,
    coefficients: list[np.ndarray],
    noise_chol: np.ndarray,
    n: int,
    rng: np.random.Generator,
    burn: int = 200,
) -> np.ndarray:
    """Simulate a stable VAR(p)."""
    k = intercept.size
    p = len(coefficients)
    hist = [np.zeros(k) for _ in range(p)]
    out = np.empty((n + burn, k))
    for t in range(n + burn):
        y = intercept + noise_chol @ rng.standard_normal(k)
        for j, coef in enumerate(coefficients):
            y = y + coef @ hist[j]
        out[t] = y
        hist = [y] + hist[:-1]
    return out[burn:]


def sv_path(
    mu: float, phi: float, sig_eta: float, n: int, rng: np.random.Generator,
) -> np.ndarray:
    """Simulate a univariate stochastic volatility return series."""
    h = mu + sig_eta / np.sqrt(1.0 - phi * phi) * rng.standard_normal()
    out = np.empty(n)
    for t in range(n):
        out[t] = np.exp(0.5 * h) * rng.standard_normal()
        h = mu + phi * (h - mu) + sig_eta * rng.standard_normal()
    return out


def markov_switching_path(
    means: np.ndarray,
    covs: np.ndarray,
    trans: np.ndarray,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate i.i.d.-within-regime Gaussian data with Markov switching."""
    k_reg, n_dim = np.asarray(means).shape
    chols = [np.linalg.cholesky(np.asarray(c)) for c in covs]
    state = 0
    out = np.empty((n, n_dim))
    states = np.empty(n, dtype=int)
    for t in range(n):
        states[t] = state
        out[t] = means[state] + chols[state] @ rng.standard_normal(n_dim)
        state = int(rng.choice(k_reg, p=trans[state]))
    return out, states


def random_walks(n_assets: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent driftless random walks (unit-root levels)."""
    return np.cumsum(rng.standard_normal((n, n_assets)), axis=0)


def common_trend_pair(n: int, rng: np.random.Generator) -> np.ndarray:
    """Two series sharing one stochastic trend (cointegration rank 1).

    Error-correction form with beta = (1, -1): the spread mean-reverts
    while the sum drifts as a random walk.
    """
    y = np.zeros((n, 2))
    for t in range(1, n):
        ect = y[t - 1, 0] - y[t - 1, 1]
        y[t, 0] = y[t - 1, 0] - 0.15 * ect + rng.standard_normal()
        y[t, 1] = y[t - 1, 1] + 0.15 * ect + rng.standard_normal()
    return y
