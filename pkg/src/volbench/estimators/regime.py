"""Markov regime-switching VAR estimated by EM.

Regime-specific intercepts and innovation covariances, shared
autoregressive matrices; the E-step is a Hamilton filter plus Kim
smoother, the M-step a weighted GLS (an ECM step, so the likelihood is
non-decreasing).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import EstimationError, ModelConfig
from .kernels import hamilton_filter, kim_smoother

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class _Params:
    intercepts: np.ndarray   # (K, N)
    ar: np.ndarray           # (N, N*p), [A_1 .. A_p] stacked column-wise
    covs: np.ndarray         # (K, N, N)
    trans: np.ndarray        # (K, K)
    pi0: np.ndarray          # (K,)


def _design(y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    m, n = y.shape
    t_eff = m - p
    u = np.empty((t_eff, n * p))
    for k in range(p):
        u[:, k * n : (k + 1) * n] = y[p - 1 - k : m - 1 - k]
    return u, y[p:]


def _log_densities(target: np.ndarray, u: np.ndarray, params: _Params) -> np.ndarray:
    t_eff, n = target.shape
    k_reg = params.intercepts.shape[0]
    out = np.empty((t_eff, k_reg))
    base = target - u @ params.ar.T
    for r in range(k_reg):
        resid = base - params.intercepts[r]
        lo = np.linalg.cholesky(params.covs[r])
        logdet = 2.0 * float(np.sum(np.log(np.diag(lo))))
        sol = np.linalg.solve(lo, resid.T)
        quad = np.sum(sol * sol, axis=0)
        out[:, r] = -0.5 * (n * LOG_2PI + logdet + quad)
    return out


def _m_step(
    target: np.ndarray,
    u: np.ndarray,
    weights: np.ndarray,
    covs: np.ndarray,
    counts: np.ndarray,
    pi0: np.ndarray,
) -> _Params:
    t_eff, n = target.shape
    k_reg = weights.shape[1]
    q = k_reg + u.shape[1]

    a_mat = np.zeros((n * q, n * q))
    b_vec = np.zeros((n * q, 1))
    for r in range(k_reg):
        w = weights[:, r]
        if w.sum() < n + 1:
            raise EstimationError("regime degenerated during EM")
        feats = np.zeros((t_eff, q))
        feats[:, r] = 1.0
        feats[:, k_reg:] = u
        wf = feats * w[:, None]
        g = feats.T @ wf
        h = wf.T @ target
        s = np.linalg.inv(covs[r])
        a_mat += np.kron(s, g)
        b_vec += np.kron(s, np.eye(q)) @ h.reshape(-1, 1, order="F")
    theta = np.linalg.solve(a_mat, b_vec).reshape(q, n, order="F")

    intercepts = theta[:k_reg]
    ar = theta[k_reg:].T
    base = target - u @ ar.T
    new_covs = np.empty_like(covs)
    for r in range(k_reg):
        resid = base - intercepts[r]
        w = weights[:, r]
        cov = (resid * w[:, None]).T @ resid / w.sum()
        cov = 0.5 * (cov + cov.T)
        # keep every regime covariance safely invertible
        floor = 1e-10 * max(np.trace(cov) / n, 1e-300)
        vals = np.linalg.eigvalsh(cov)
        if vals[0] < floor:
            cov = cov + (floor - vals[0]) * np.eye(n)
        new_covs[r] = cov

    row_sums = counts.sum(axis=1, keepdims=True)
    trans = np.where(row_sums > 0, counts / np.maximum(row_sums, 1e-300), 1.0 / k_reg)
    trans = trans / trans.sum(axis=1, keepdims=True)
    return _Params(intercepts, ar, new_covs, trans, pi0)


def _kmeans_labels(series: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = series[rng.choice(series.size, size=k, replace=False)]
    labels = np.zeros(series.size, dtype=np.int64)
    for _ in range(25):
        dist = np.abs(series[:, None] - centers[None, :])
        new_labels = dist.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            sel = labels == j
            if sel.any():
                centers[j] = series[sel].mean()
    return labels


def _initial_params(
    target: np.ndarray,
    u: np.ndarray,
    labels: np.ndarray,
    k_reg: int,
) -> _Params:
    t_eff, n = target.shape
    weights = np.zeros((t_eff, k_reg))
    weights[np.arange(t_eff), labels] = 1.0
    weights = 0.9 * weights + 0.1 / k_reg
    covs = np.tile(np.cov(target, rowvar=False) + 1e-8 * np.eye(n), (k_reg, 1, 1))
    counts = np.ones((k_reg, k_reg))
    for prev, cur in zip(labels[:-1], labels[1:]):
        counts[prev, cur] += 1.0
    pi0 = np.full(k_reg, 1.0 / k_reg)
    return _m_step(target, u, weights, covs, counts, pi0)


def rsvar_fit(window: np.ndarray, config: ModelConfig = ModelConfig()):
    """EM fit of the regime-switching VAR; returns the best of the seeded starts."""
    y = np.asarray(window, dtype=float)
    m, n = y.shape
    p = config.var_lags
    k_reg = config.regimes
    if m < config.state_min_obs:
        raise EstimationError(
            f"insufficient history for RSVAR: {m} < {config.state_min_obs}"
        )
    if config.mcmc.seed is None:
        raise EstimationError("RSVAR requires a seed (ModelConfig.mcmc.seed)")
    rng = np.random.default_rng(config.mcmc.seed)

    u, target = _design(y, p)
    # k-means on the rolling variance of the cross-sectional mean return
    pooled = y.mean(axis=1)
    width = 10
    roll = np.array(
        [pooled[max(0, i - width + 1) : i + 1].var() for i in range(p, m)]
    )

    best = None
    failed = 0
    for _ in range(config.rsvar_starts):
        labels = _kmeans_labels(roll, k_reg, rng)
        try:
            params = _initial_params(target, u, labels, k_reg)
            ll_prev = -np.inf
            path = []
            converged = False
            for _ in range(config.em_max_iter):
                logdens = _log_densities(target, u, params)
                ll, filtered, predicted = hamilton_filter(
                    logdens, params.trans, params.pi0
                )
                if ll <= -1e99:
                    raise EstimationError("filter degenerated")
                if ll < ll_prev - 1e-8:
                    raise EstimationError(
                        f"EM likelihood decreased by {ll_prev - ll:.3g}"
                    )
                path.append(float(ll))
                converged = ll - ll_prev < 1e-8 * (1.0 + abs(ll))
                ll_prev = ll
                if converged:
                    break
                smoothed, counts = kim_smoother(filtered, predicted, params.trans)
                params = _m_step(
                    target, u, smoothed, params.covs, counts, smoothed[0].copy()
                )
            if not converged:
                # keep the filter output coherent with the final parameters
                logdens = _log_densities(target, u, params)
                ll, filtered, predicted = hamilton_filter(
                    logdens, params.trans, params.pi0
                )
                path.append(float(ll))
                ll_prev = ll
        except (EstimationError, np.linalg.LinAlgError):
            failed += 1
            continue
        if best is None or ll_prev > best[0]:
            best = (ll_prev, params, filtered, tuple(path))
    if best is None:
        raise EstimationError(
            "all RSVAR starts failed", {"failed_starts": failed}
        )
    return best, failed


def rsvar_cov(window: np.ndarray, config: ModelConfig = ModelConfig()):
    """Predictive one-step moments of the regime-switching VAR.

    The covariance mixes the regime innovation covariances with the
    regime-mean dispersion under the one-step-ahead regime probabilities.
    """
    y = np.asarray(window, dtype=float)
    m, n = y.shape
    p = config.var_lags
    (ll, params, filtered, path), failed = rsvar_fit(y, config)

    p_next = params.trans.T @ filtered[-1]
    u_next = np.concatenate([y[m - 1 - k] for k in range(p)])
    means = params.intercepts + (params.ar @ u_next)[None, :]
    mu = p_next @ means
    sigma = np.zeros((n, n))
    for r in range(params.intercepts.shape[0]):
        dev = means[r] - mu
        sigma += p_next[r] * (params.covs[r] + np.outer(dev, dev))

    order = np.argsort([float(np.trace(c)) for c in params.covs])
    diagnostics = {
        "loglik": float(ll),
        "loglik_path": path,
        "iterations": len(path),
        "failed_starts": failed,
        "regime_covariances": [params.covs[r] for r in order],
        "transition": params.trans,
        "next_regime_probs": p_next,
        "converged": True,
    }
    return mu, 0.5 * (sigma + sigma.T), diagnostics
