"""Stochastic volatility margins sampled by MCMC.

Each asset follows log sigma2[t] = mu + phi*(log sigma2[t-1] - mu) +
sig_eta*eta[t].  The log-squared-return observation equation is linearized
with the standard 10-component Gaussian mixture approximation to the
log chi-square(1) distribution, so the latent path can be drawn exactly by
forward filtering and backward sampling.
"""
from __future__ import annotations

import math

import numpy as np

from .base import EstimationError, McmcConfig, ModelConfig, demean
from .kernels import sv_ffbs

# 10-component Gaussian mixture approximation to log chi2(1)
# (Omori, Chib, Shephard & Nakajima 2007): probability, mean, variance.
_MIX_PROB = np.array(
    [0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115]
)
_MIX_MEAN = np.array(
    [1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65000]
)
_MIX_VAR = np.array(
    [0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342]
)


def _sample_components(ystar: np.ndarray, h: np.ndarray, rng: np.random.Generator):
    """Draw mixture indicators given the log-volatility path."""
    resid = ystar[:, None] - h[:, None] - _MIX_MEAN[None, :]
    logw = (
        np.log(_MIX_PROB)[None, :]
        - 0.5 * np.log(_MIX_VAR)[None, :]
        - 0.5 * resid * resid / _MIX_VAR[None, :]
    )
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    cum = np.cumsum(w, axis=1)
    u = rng.random(ystar.size)
    return (u[:, None] > cum).sum(axis=1)


def _draw_phi(h: np.ndarray, mu: float, sig2: float, rng: np.random.Generator) -> float:
    x = h[:-1] - mu
    y = h[1:] - mu
    sxx = float(x @ x)
    if sxx <= 0:
        return 0.0
    mean = float(x @ y) / sxx
    sd = math.sqrt(sig2 / sxx)
    for _ in range(1000):
        cand = rng.normal(mean, sd)
        if abs(cand) < 0.999:
            return cand
    return max(min(mean, 0.998), -0.998)


def _sv_chain(y: np.ndarray, mcmc: McmcConfig, rng: np.random.Generator):
    """Single-asset SV Gibbs sampler; returns posterior summaries."""
    t_len = y.size
    var_y = float(y.var(ddof=1))
    if var_y <= 0:
        raise EstimationError("constant series: SV variance undefined")
    offset = 1e-8 * var_y
    ystar = np.log(y * y + offset)

    mu = math.log(var_y)
    phi = 0.95
    sig2 = 0.05
    h = np.full(t_len, mu)

    # weakly informative priors
    prior_mu_mean, prior_mu_var = mu, 100.0
    prior_sig_shape, prior_sig_scale = 2.5, 0.025

    n_sweeps = mcmc.burn_in + mcmc.draws
    kept = 0
    h_sum = np.zeros(t_len)
    vol_next_sum = 0.0
    phi_sum = 0.0
    phi_draws = []
    for sweep in range(n_sweeps):
        comp = _sample_components(ystar, h, rng)
        normals = rng.standard_normal(t_len)
        h = sv_ffbs(
            ystar, _MIX_MEAN[comp], _MIX_VAR[comp], mu, phi, sig2, normals
        )

        phi = _draw_phi(h, mu, sig2, rng)

        resid = (h[1:] - mu) - phi * (h[:-1] - mu)
        shape = prior_sig_shape + 0.5 * (t_len - 1)
        scale = prior_sig_scale + 0.5 * float(resid @ resid)
        sig2 = scale / rng.gamma(shape, 1.0)

        denom = (t_len - 1) * (1.0 - phi) ** 2 / sig2 + 1.0 / prior_mu_var
        num = (
            (1.0 - phi) * float(np.sum(h[1:] - phi * h[:-1])) / sig2
            + prior_mu_mean / prior_mu_var
        )
        mu = rng.normal(num / denom, math.sqrt(1.0 / denom))

        if sweep >= mcmc.burn_in and (sweep - mcmc.burn_in) % mcmc.thin == 0:
            kept += 1
            h_sum += h
            # E[exp(h_{T+1}/2) | draw] with the state innovation integrated out
            mean_next = mu + phi * (h[-1] - mu)
            vol_next_sum += math.exp(0.5 * mean_next + sig2 / 8.0)
            phi_sum += phi
            phi_draws.append(phi)

    if kept == 0:
        raise EstimationError("no retained MCMC draws; increase draws/thin")
    phi_arr = np.array(phi_draws)
    return {
        "h_mean": h_sum / kept,
        "vol_next": vol_next_sum / kept,
        "phi_mean": phi_sum / kept,
        "phi_boundary": bool(np.mean(np.abs(phi_arr) > 0.995) > 0.2),
        "kept_draws": kept,
    }


def msv_cov(window: np.ndarray, config: ModelConfig = ModelConfig()):
    """Per-asset SV forecasts combined with a static residual correlation.

    Sigma = D R D with D the posterior-mean one-step volatility forecasts
    and R the sample correlation of the residuals standardized by the
    posterior-mean volatility path.
    """
    w = np.asarray(window, dtype=float)
    m, n = w.shape
    if m < config.state_min_obs:
        raise EstimationError(
            f"insufficient history for SV: {m} < {config.state_min_obs}"
        )
    if config.mcmc.seed is None:
        raise EstimationError("MSV requires a seed (ModelConfig.mcmc.seed)")
    _, centered = demean(w)

    streams = np.random.SeedSequence(config.mcmc.seed).spawn(n)
    vols = np.empty(n)
    z = np.empty_like(centered)
    boundary = False
    phis = []
    for i in range(n):
        rng = np.random.default_rng(streams[i])
        summary = _sv_chain(centered[:, i], config.mcmc, rng)
        vols[i] = summary["vol_next"]
        z[:, i] = centered[:, i] / np.exp(0.5 * summary["h_mean"])
        boundary = boundary or summary["phi_boundary"]
        phis.append(summary["phi_mean"])

    if n == 1:
        sigma = np.array([[vols[0] ** 2]])
        corr = np.array([[1.0]])
    else:
        corr = np.corrcoef(z, rowvar=False)
        corr = 0.5 * (corr + corr.T)
        np.fill_diagonal(corr, 1.0)
        sigma = corr * np.outer(vols, vols)
    diagnostics = {
        "phi_means": phis,
        "phi_boundary": boundary,
        "converged": True,
        "kept_draws": (config.mcmc.draws + config.mcmc.thin - 1) // config.mcmc.thin,
    }
    return 0.5 * (sigma + sigma.T), diagnostics
