"""volbench: conditional-covariance models, variance-only portfolio
strategies, and rolling out-of-sample benchmarking against 1/N."""

from .backtest import (
    BacktestConfig,
    BacktestError,
    BacktestResult,
    StrategyPath,
    drifted_weights,
    net_return,
    run_backtest,
    turnover,
    write_result_csvs,
)
from .estimators import (
    MODEL_IDS,
    EstimateCache,
    EstimationError,
    McmcConfig,
    ModelConfig,
    MomentEstimate,
    OptimizerConfig,
    combine_parameters,
    ensure_psd,
    estimate,
)
from .panel import (
    LoadSchema,
    PanelError,
    ReturnPanel,
    WindowSlice,
    from_canonical_csv,
    load_french_library,
    load_returns,
    rolling_windows,
    scale_frequency,
    to_canonical_csv,
    write_canonical_csv,
)
from .report import consistency_score, emit_pct_diff, format_cell, render_table
from .stats import (
    MetricReport,
    StatsError,
    brown_forsythe,
    compare_with_benchmark,
    diebold_mariano,
    forecast_errors,
    lw_sharpe_test,
    sharpe,
    volatility,
)
from .strategies import (
    STRATEGY_IDS,
    StrategyError,
    WeightVector,
    con_mvp_weights,
    mvp_weights,
    naive_weights,
    strategy_weights,
    tp_weights,
    vt_weights,
)

__version__ = "0.1.0"
