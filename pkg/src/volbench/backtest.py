"""Rolling-window out-of-sample driver.

For every window: fit the requested models, map each estimate through each
strategy, realize the next period's gross and net return, and track
turnover against value-drifted carry-forward weights.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimators import (
    COMPONENT_MODELS,
    MODEL_IDS,
    EstimationError,
    ModelConfig,
    MomentEstimate,
    combine_parameters,
    config_for_window,
    ensure_psd,
    estimate,
    relative_floor,
)
from .estimators.static import sample_cov
from .panel import ReturnPanel, WindowSlice, rolling_windows
from .strategies import STRATEGY_IDS, StrategyError, naive_weights, strategy_weights


class BacktestError(ValueError):
    """Configuration or bookkeeping failure in the rolling backtest."""


@dataclass(frozen=True)
class BacktestConfig:
    window: int
    kappa: float = 0.005
    master_seed: int = 0
    models: tuple[str, ...] = ("COV",)
    strategies: tuple[str, ...] = ("MVP", "CON_MVP", "VT", "TP")
    jobs: int = 1
    horizon: int = 1
    free_initial: bool = False
    model_config: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.horizon != 1:
            raise BacktestError("horizon is fixed at 1")
        if self.kappa < 0:
            raise BacktestError("kappa must be nonnegative")
        if self.window < 60:
            raise BacktestError("window must be at least 60 periods")
        if self.jobs < 1:
            raise BacktestError("jobs must be positive")
        models = tuple(self.models)
        for mid in models:
            if mid not in MODEL_IDS:
                raise BacktestError(f"unknown model id {mid!r}")
        strategies = tuple(s for s in self.strategies if s != "NAIVE")
        for sid in strategies:
            if sid not in STRATEGY_IDS:
                raise BacktestError(f"unknown strategy {sid!r}")
        if not models or not strategies:
            raise BacktestError("need at least one model and one strategy")
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "strategies", strategies)


@dataclass(frozen=True)
class StrategyPath:
    gross: np.ndarray
    net: np.ndarray
    turnover: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class BacktestResult:
    dates: tuple
    assets: tuple[str, ...]
    naive: StrategyPath
    paths: dict
    fallback_log: tuple
    config: BacktestConfig


def drifted_weights(w_prev: np.ndarray, r_realized: np.ndarray) -> np.ndarray:
    """Buy-and-hold weight drift over one period."""
    w = np.asarray(w_prev, dtype=float)
    r = np.asarray(r_realized, dtype=float)
    growth = 1.0 + float(w @ r)
    if growth <= 0:
        raise BacktestError("portfolio wiped out: drift denominator not positive")
    return w * (1.0 + r) / growth


def turnover(w_new: np.ndarray, w_drifted: np.ndarray) -> float:
    """L1 distance between target weights and pre-trade drifted weights."""
    a = np.asarray(w_new, dtype=float)
    b = np.asarray(w_drifted, dtype=float)
    if a.shape != b.shape:
        raise BacktestError("turnover: mismatched weight vectors")
    return float(np.abs(a - b).sum())


def net_return(w_t, w_drifted, r_next, kappa: float) -> float:
    """Gross return shaved by the proportional cost of the rebalance."""
    gross = float(np.asarray(w_t, dtype=float) @ np.asarray(r_next, dtype=float))
    return (1.0 - kappa * turnover(w_t, w_drifted)) * gross


def _fallback_estimate(window_slice: WindowSlice, config: ModelConfig, model_id: str) -> MomentEstimate:
    sigma = sample_cov(window_slice.window)
    return MomentEstimate(
        model_id=model_id,
        mu=window_slice.window.mean(axis=0),
        sigma=ensure_psd(sigma, relative_floor(sigma, config)),
        diagnostics={"fallback": "sample covariance"},
    )


def _window_estimates(args):
    """Fit every requested model on one window (worker-safe)."""
    window_slice, model_ids, model_config, master_seed = args
    out = {}
    errors = {}
    for mid in model_ids:
        cfg = config_for_window(model_config, master_seed, mid, window_slice.target_index)
        try:
            out[mid] = estimate(mid, window_slice, cfg)
        except EstimationError as err:
            out[mid] = None
            errors[mid] = str(err)
    return window_slice.target_index, out, errors


def run_backtest(
    panel: ReturnPanel,
    config: BacktestConfig,
    daily: ReturnPanel | None = None,
) -> BacktestResult:
    """Run the full rolling experiment for every requested (model, strategy).

    Model failures on individual windows fall back to the sample
    covariance and are logged, so every series keeps the same length and
    paired tests stay valid.  The naive benchmark is always included.
    """
    needs_daily = bool({"RCOV", "CP"} & set(config.models))
    if needs_daily and daily is None:
        raise BacktestError("RCOV/CP requested but no daily companion panel supplied")
    slices = list(
        rolling_windows(panel, config.window, daily if needs_daily else None)
    )
    n = panel.n_assets
    k = len(slices)
    targets = [s.target_index for s in slices]
    target_returns = panel.returns[targets]

    component_ids = tuple(
        mid for mid in (COMPONENT_MODELS if "CP" in config.models else config.models)
        if mid != "CP"
    )
    tasks = [
        (s, component_ids, config.model_config, config.master_seed) for s in slices
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            raw = list(pool.map(_window_estimates, tasks, chunksize=8))
    else:
        raw = [_window_estimates(t) for t in tasks]
    raw.sort(key=lambda item: item[0])

    fallback_log: list[tuple[int, str, str]] = []
    estimates: dict[str, list[MomentEstimate]] = {mid: [] for mid in config.models}
    for (t_idx, fits, errors), window_slice in zip(raw, slices):
        for mid in config.models:
            if mid == "CP":
                sigmas = [f.sigma for f in fits.values() if f is not None]
                missing = sorted(set(component_ids) - {m for m, f in fits.items() if f is not None})
                if sigmas:
                    sigma = combine_parameters(sigmas)
                    est = MomentEstimate(
                        model_id="CP",
                        mu=window_slice.window.mean(axis=0),
                        sigma=ensure_psd(sigma, relative_floor(sigma, config.model_config)),
                        diagnostics={"missing": tuple(missing)},
                    )
                    if missing:
                        fallback_log.append(
                            (t_idx, "CP", f"averaged without {','.join(missing)}")
                        )
                else:
                    est = _fallback_estimate(window_slice, config.model_config, "CP")
                    fallback_log.append((t_idx, "CP", "every component failed"))
            elif fits[mid] is not None:
                est = fits[mid]
            else:
                est = _fallback_estimate(window_slice, config.model_config, mid)
                fallback_log.append((t_idx, mid, errors.get(mid, "estimation failed")))
            estimates[mid].append(est)

    def _run_path(weight_fn) -> StrategyPath:
        gross = np.empty(k)
        net = np.empty(k)
        turn = np.empty(k)
        weights = np.empty((k, n))
        w_pre = None  # pre-trade weights; None means the cash start
        for i in range(k):
            w = weight_fn(i, w_pre)
            if w_pre is None:
                turn_i = 0.0 if config.free_initial else float(np.abs(w).sum())
            else:
                turn_i = turnover(w, w_pre)
            g = float(w @ target_returns[i])
            gross[i] = g
            net[i] = (1.0 - config.kappa * turn_i) * g
            turn[i] = turn_i
            weights[i] = w
            w_pre = drifted_weights(w, target_returns[i])
        return StrategyPath(gross=gross, net=net, turnover=turn, weights=weights)

    naive_w = naive_weights(n).weights
    naive_path = _run_path(lambda i, prev: naive_w)

    paths = {}
    for mid in config.models:
        for sid in config.strategies:
            if sid == "NAIVE":
                continue

            def weight_fn(i, prev, mid=mid, sid=sid):
                est = estimates[mid][i]
                try:
                    return strategy_weights(sid, est.mu, est.sigma).weights
                except StrategyError as err:
                    fallback_log.append(
                        (targets[i], f"{mid}/{sid}", f"hold: {err}")
                    )
                    return prev.copy() if prev is not None else np.zeros(n)

            paths[(mid, sid)] = _run_path(weight_fn)

    return BacktestResult(
        dates=tuple(panel.dates[t] for t in targets),
        assets=panel.assets,
        naive=naive_path,
        paths=paths,
        fallback_log=tuple(fallback_log),
        config=config,
    )


def path_csv(result: BacktestResult, path_obj: StrategyPath) -> str:
    header = ["date", "gross", "net", "turnover"] + [f"w_{a}" for a in result.assets]
    lines = [",".join(header)]
    for i, date in enumerate(result.dates):
        row = [
            date.isoformat(),
            repr(float(path_obj.gross[i])),
            repr(float(path_obj.net[i])),
            repr(float(path_obj.turnover[i])),
        ] + [repr(float(v)) for v in path_obj.weights[i]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_result_csvs(result: BacktestResult, directory) -> dict[str, str]:
    """Write one CSV per (model, strategy) plus the naive benchmark.

    Returns {relative filename: sha256 of contents} for the run manifest.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    hashes: dict[str, str] = {}

    def _write(name: str, text: str):
        (directory / name).write_text(text, encoding="utf-8")
        hashes[name] = hashlib.sha256(text.encode()).hexdigest()

    _write("NAIVE.csv", path_csv(result, result.naive))
    for (mid, sid), path_obj in sorted(result.paths.items()):
        _write(f"{mid}_{sid}.csv", path_csv(result, path_obj))
    return hashes
