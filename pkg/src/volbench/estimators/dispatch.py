"""Model dispatch: one entry point mapping (model, window) to moments."""
from __future__ import annotations

import dataclasses
from typing import Iterable, Mapping

import numpy as np

from ..panel import WindowSlice
from .base import (
    COMPONENT_MODELS,
    DAILY_MODELS,
    FORECAST_MEAN_MODELS,
    MODEL_IDS,
    EstimationError,
    ModelConfig,
    MomentEstimate,
    demean,
    derive_seed,
    ensure_psd,
    relative_floor,
)
from .copula import copula_garch_cov
from .garch import bekk_cov, ccc_cov, dcc_cov
from .realized import rcov
from .regime import rsvar_cov
from .static import ewma_cov, sample_cov
from .sv import msv_cov
from .varmodels import var_fit, vecm_fit


def combine_parameters(estimates: Iterable[np.ndarray]) -> np.ndarray:
    """Entrywise arithmetic mean of covariance estimates."""
    mats = [np.asarray(m, dtype=float) for m in estimates]
    if not mats:
        raise EstimationError("combine_parameters needs at least one estimate")
    shape = mats[0].shape
    for m in mats:
        if m.shape != shape:
            raise EstimationError("combine_parameters: mismatched shapes")
    return sum(mats) / len(mats)


def _raw_estimate(model_id: str, window_slice: WindowSlice, config: ModelConfig):
    """Model-specific fit; returns (mu or None, sigma, diagnostics)."""
    window = window_slice.window
    if model_id == "COV":
        return None, sample_cov(window), {}
    if model_id == "EWMA":
        return None, ewma_cov(window, config.lambda_ewma), {}
    if model_id == "VAR":
        fit = var_fit(window, config.var_lags)
        return fit.one_step_mean, fit.residual_cov, {"ridge": fit.ridge}
    if model_id == "VEC":
        fit = vecm_fit(window, config.var_lags)
        return fit.one_step_mean, fit.residual_cov, {"rank": fit.rank, "ridge": fit.ridge}
    if model_id == "BEKK":
        sigma, diag = bekk_cov(window, config, asymmetric=False)
        return None, sigma, diag
    if model_id == "ABEKK":
        sigma, diag = bekk_cov(window, config, asymmetric=True)
        return None, sigma, diag
    if model_id == "CCC":
        sigma, diag = ccc_cov(window, config)
        return None, sigma, diag
    if model_id == "DCC":
        sigma, diag = dcc_cov(window, config, asymmetric=False)
        return None, sigma, diag
    if model_id == "ADCC":
        sigma, diag = dcc_cov(window, config, asymmetric=True)
        return None, sigma, diag
    if model_id == "COPULA":
        seed = config.mcmc.seed if config.mcmc.seed is not None else 0
        sigma, diag = copula_garch_cov(window, config, seed=seed)
        return None, sigma, diag
    if model_id == "RSVAR":
        mu, sigma, diag = rsvar_cov(window, config)
        return mu, sigma, diag
    if model_id == "MSV":
        sigma, diag = msv_cov(window, config)
        return None, sigma, diag
    if model_id == "RCOV":
        if window_slice.trailing_daily is None:
            raise EstimationError("RCOV requires the daily companion data")
        sigma, diag = rcov(window_slice.trailing_daily, config.rcov_smooth)
        return None, sigma, diag
    raise EstimationError(f"unknown model id {model_id!r}")


def estimate(
    model_id: str,
    window_slice: WindowSlice,
    config: ModelConfig = ModelConfig(),
    cache: "EstimateCache | None" = None,
) -> MomentEstimate:
    """One-step-ahead conditional moments of one model on one window.

    Every covariance passes through the scale-free PSD repair; the
    conditional mean is the window sample mean except for the models that
    produce a proper mean forecast (VAR, VEC, RSVAR).
    """
    if model_id not in MODEL_IDS:
        raise EstimationError(f"unknown model id {model_id!r}")
    if cache is not None:
        hit = cache.get(model_id, window_slice, config)
        if hit is not None:
            return hit

    if model_id == "CP":
        est = _estimate_cp(window_slice, config)
    else:
        mu, sigma, diagnostics = _raw_estimate(model_id, window_slice, config)
        if mu is None:
            mu = window_slice.window.mean(axis=0)
        floor = relative_floor(sigma, config)
        repaired = ensure_psd(sigma, floor)
        diagnostics = dict(diagnostics)
        diagnostics["psd_floor"] = floor
        est = MomentEstimate(
            model_id=model_id, mu=np.asarray(mu, float), sigma=repaired,
            diagnostics=diagnostics,
        )
    if cache is not None:
        cache.put(model_id, window_slice, config, est)
    return est


def _estimate_cp(window_slice: WindowSlice, config: ModelConfig) -> MomentEstimate:
    """Average the thirteen component estimates (partial on failures)."""
    sigmas = []
    missing = []
    for mid in COMPONENT_MODELS:
        sub = config
        if config.mcmc.seed is not None:
            # give every stochastic component its own derived stream
            sub = dataclasses.replace(
                config,
                mcmc=dataclasses.replace(
                    config.mcmc, seed=derive_seed(config.mcmc.seed, mid, 0)
                ),
            )
        try:
            sigmas.append(estimate(mid, window_slice, sub).sigma)
        except EstimationError as err:
            missing.append((mid, str(err)))
    if not sigmas:
        raise EstimationError("every CP component failed", {"missing": missing})
    sigma = combine_parameters(sigmas)
    mu = window_slice.window.mean(axis=0)
    floor = relative_floor(sigma, config)
    return MomentEstimate(
        model_id="CP",
        mu=mu,
        sigma=ensure_psd(sigma, floor),
        diagnostics={"missing": missing, "n_components": len(sigmas), "psd_floor": floor},
    )


def config_for_window(
    config: ModelConfig, master_seed: int, model_id: str, window_index: int
) -> ModelConfig:
    """Copy of the config with the per-(model, window) derived seed."""
    seed = derive_seed(master_seed, model_id, window_index)
    return dataclasses.replace(
        config, mcmc=dataclasses.replace(config.mcmc, seed=seed)
    )


from .cache import EstimateCache  # noqa: E402  (circular-import guard)
