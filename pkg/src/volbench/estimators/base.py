"""Shared types for the conditional moment estimators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

#: All model identifiers, in canonical order.  CP (combined parameter) is
#: the entrywise average of the other thirteen and always comes last.
MODEL_IDS = (
    "COV",
    "EWMA",
    "VAR",
    "VEC",
    "BEKK",
    "ABEKK",
    "CCC",
    "DCC",
    "ADCC",
    "COPULA",
    "RSVAR",
    "MSV",
    "RCOV",
    "CP",
)

#: The thirteen component models feeding the CP average.
COMPONENT_MODELS = MODEL_IDS[:-1]

#: Models whose conditional mean is a fitted forecast rather than the
#: window sample mean.
FORECAST_MEAN_MODELS = frozenset({"VAR", "VEC", "RSVAR"})

#: Models that need the daily companion data of the window.
DAILY_MODELS = frozenset({"RCOV"})

#: Models whose output depends on a random stream.
SEEDED_MODELS = frozenset({"RSVAR", "MSV", "COPULA"})


class EstimationError(RuntimeError):
    """A model failed on a window; carries fit diagnostics for the caller."""

    def __init__(self, message: str, diagnostics: Mapping[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


@dataclass(frozen=True)
class McmcConfig:
    burn_in: int = 1000
    draws: int = 4000
    thin: int = 2
    seed: int | None = None

    def __post_init__(self):
        if self.burn_in < 0 or self.draws < 1 or self.thin < 1:
            raise ValueError("invalid MCMC settings")


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 500
    gradient_tol: float = 1e-8
    restarts: int = 4

    def __post_init__(self):
        if self.max_iter < 1 or self.gradient_tol <= 0 or self.restarts < 0:
            raise ValueError("invalid optimizer settings")


@dataclass(frozen=True)
class ModelConfig:
    """Tuning knobs shared by all estimators.

    ``psd_floor`` is relative: the eigenvalue floor applied to an estimate
    is psd_floor times the mean diagonal of the raw matrix, which makes the
    repair scale-free.
    """

    lambda_ewma: float = 0.94
    var_lags: int = 2
    regimes: int = 2
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    psd_floor: float = 1e-8
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    garch_min_obs: int = 100
    state_min_obs: int = 200
    rsvar_starts: int = 20
    em_max_iter: int = 300
    rcov_smooth: int = 1
    copula_sim_draws: int = 20000

    def __post_init__(self):
        if not 0.0 < self.lambda_ewma < 1.0:
            raise ValueError("lambda_ewma must lie in (0, 1)")
        if self.var_lags < 1:
            raise ValueError("var_lags must be >= 1")
        if self.regimes < 2:
            raise ValueError("regimes must be >= 2")
        if self.psd_floor <= 0:
            raise ValueError("psd_floor must be positive")
        if self.rcov_smooth < 1:
            raise ValueError("rcov_smooth must be >= 1")


@dataclass(frozen=True)
class MomentEstimate:
    """One-step-ahead conditional mean and covariance from one model."""

    model_id: str
    mu: np.ndarray
    sigma: np.ndarray
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if self.model_id not in MODEL_IDS:
            raise ValueError(f"unknown model id {self.model_id!r}")
        if mu.ndim != 1 or sigma.shape != (mu.size, mu.size):
            raise ValueError("mu must be N-vector and sigma N x N")
        if not np.all(np.isfinite(mu)):
            raise ValueError("non-finite conditional mean")
        if not np.all(np.isfinite(sigma)):
            raise ValueError("non-finite covariance estimate")
        scale = max(1.0, float(np.abs(sigma).max()))
        if float(np.abs(sigma - sigma.T).max()) > 1e-10 * scale:
            raise ValueError("covariance estimate not symmetric to 1e-10")
        mu.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


def ensure_psd(matrix: np.ndarray, floor: float) -> np.ndarray:
    """Symmetrize and clip eigenvalues below ``floor`` up to ``floor``.

    Matrices that are already symmetric with min eigenvalue >= floor pass
    through unchanged (same values, fresh array).
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("ensure_psd needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("ensure_psd: non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    symmetric = float(np.abs(a - a.T).max()) <= 1e-10 * scale
    sym = a if symmetric else 0.5 * (a + a.T)
    eigvals = np.linalg.eigvalsh(sym)
    if symmetric and eigvals[0] >= floor:
        return a.copy()
    vals, vecs = np.linalg.eigh(sym)
    clipped = np.maximum(vals, floor)
    out = (vecs * clipped) @ vecs.T
    return 0.5 * (out + out.T)


def relative_floor(sigma: np.ndarray, config: ModelConfig) -> float:
    """Absolute eigenvalue floor for a raw estimate (scale-free repair)."""
    mean_diag = float(np.mean(np.diag(sigma)))
    if not np.isfinite(mean_diag) or mean_diag <= 0:
        return config.psd_floor
    return config.psd_floor * mean_diag


def derive_seed(master_seed: int, model_id: str, window_index: int) -> int:
    """Deterministic per-(model, window) seed from the master seed."""
    idx = MODEL_IDS.index(model_id)
    seq = np.random.SeedSequence([int(master_seed), idx, int(window_index)])
    return int(seq.generate_state(1, np.uint64)[0])


def demean(window: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and the demeaned window."""
    w = np.asarray(window, dtype=float)
    mean = w.mean(axis=0)
    return mean, w - mean
