"""Conditional moment estimators: fourteen models behind one dispatch."""
from .base import (
    COMPONENT_MODELS,
    DAILY_MODELS,
    FORECAST_MEAN_MODELS,
    MODEL_IDS,
    SEEDED_MODELS,
    EstimationError,
    McmcConfig,
    ModelConfig,
    MomentEstimate,
    OptimizerConfig,
    derive_seed,
    ensure_psd,
    relative_floor,
)
from .cache import EstimateCache
from .copula import copula_garch_cov
from .dispatch import combine_parameters, config_for_window, estimate
from .garch import bekk_cov, ccc_cov, dcc_cov, garch11_fit, garch11_loglik, garch11_score
from .realized import rcov, realized_matrix
from .regime import rsvar_cov
from .static import ewma_cov, sample_cov
from .sv import msv_cov
from .varmodels import johansen_rank, johansen_trace, var_fit, vecm_fit

__all__ = [
    "COMPONENT_MODELS",
    "DAILY_MODELS",
    "FORECAST_MEAN_MODELS",
    "MODEL_IDS",
    "SEEDED_MODELS",
    "EstimateCache",
    "EstimationError",
    "McmcConfig",
    "ModelConfig",
    "MomentEstimate",
    "OptimizerConfig",
    "bekk_cov",
    "ccc_cov",
    "combine_parameters",
    "config_for_window",
    "copula_garch_cov",
    "dcc_cov",
    "derive_seed",
    "ensure_psd",
    "estimate",
    "ewma_cov",
    "garch11_fit",
    "garch11_loglik",
    "garch11_score",
    "johansen_rank",
    "johansen_trace",
    "msv_cov",
    "rcov",
    "realized_matrix",
    "relative_floor",
    "rsvar_cov",
    "sample_cov",
    "var_fit",
    "vecm_fit",
]
