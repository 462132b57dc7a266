"""Performance criteria and significance tests against the benchmark."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats as sps


class StatsError(ValueError):
    """Series do not satisfy a test's preconditions."""


def sharpe(series) -> float:
    """Per-period mean over sample standard deviation (no annualization)."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise StatsError("sharpe needs at least 2 observations")
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise StatsError("degenerate series: zero standard deviation")
    return float(x.mean()) / sd


def volatility(series) -> float:
    """Sample standard deviation (divisor n-1)."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise StatsError("volatility needs at least 2 observations")
    return float(x.std(ddof=1))


def _parzen(x: float) -> float:
    ax = abs(x)
    if ax <= 0.5:
        return 1.0 - 6.0 * ax * ax + 6.0 * ax**3
    if ax <= 1.0:
        return 2.0 * (1.0 - ax) ** 3
    return 0.0


def _andrews_bandwidth(v: np.ndarray) -> float:
    """Parzen-kernel automatic bandwidth from AR(1) approximations."""
    t_len = v.shape[0]
    num = 0.0
    den = 0.0
    for j in range(v.shape[1]):
        x = v[:, j]
        lag0 = float(x[:-1] @ x[:-1])
        if lag0 <= 0:
            continue
        rho = float(x[1:] @ x[:-1]) / lag0
        rho = min(max(rho, -0.97), 0.97)
        resid = x[1:] - rho * x[:-1]
        sig2 = float(resid @ resid) / max(len(resid), 1)
        num += 4.0 * rho * rho * sig2 * sig2 / (1.0 - rho) ** 8
        den += sig2 * sig2 / (1.0 - rho) ** 4
    if den <= 0:
        return 1.0
    alpha2 = num / den
    return 2.6614 * (alpha2 * t_len) ** 0.2


def _hac_lrv(v: np.ndarray) -> np.ndarray:
    """Parzen-kernel long-run covariance of a (demeaned) moment process."""
    t_len = v.shape[0]
    band = max(_andrews_bandwidth(v), 1e-8)
    psi = v.T @ v / t_len
    max_lag = min(t_len - 1, int(math.floor(band)))
    for j in range(1, max_lag + 1):
        w = _parzen(j / band)
        if w == 0.0:
            break
        gamma = v[j:].T @ v[:-j] / t_len
        psi += w * (gamma + gamma.T)
    return psi


@dataclass(frozen=True)
class SharpeTestResult:
    delta: float
    stat: float
    p_value: float


def _sharpe_gradient(mu: float, gamma: float) -> tuple[float, float]:
    s2 = gamma - mu * mu
    scale = s2 ** -1.5
    return gamma * scale, -0.5 * mu * scale


def lw_sharpe_test(
    series_a,
    series_b,
    bootstrap: bool = False,
    bootstrap_reps: int = 1000,
    block_length: int = 5,
    seed: int = 0,
) -> SharpeTestResult:
    """Robust two-sided test of a Sharpe ratio difference.

    The variance of the difference comes from the delta method on the
    moment process (a, b, a^2, b^2) with a Parzen-kernel HAC estimator and
    automatic bandwidth.  A studentized circular block bootstrap refines
    the p-value when requested.
    """
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.shape != b.shape:
        raise StatsError("series must have equal length")
    t_len = a.size
    if t_len < 50:
        raise StatsError("need at least 50 paired observations")
    if a.std(ddof=1) == 0 or b.std(ddof=1) == 0:
        raise StatsError("degenerate series: zero variance")

    def _stat(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
        mu_x, mu_y = float(x.mean()), float(y.mean())
        g_x, g_y = float((x * x).mean()), float((y * y).mean())
        delta = sharpe(x) - sharpe(y)
        dmx, dgx = _sharpe_gradient(mu_x, g_x)
        dmy, dgy = _sharpe_gradient(mu_y, g_y)
        grad = np.array([dmx, -dmy, dgx, -dgy])
        v = np.column_stack([x - mu_x, y - mu_y, x * x - g_x, y * y - g_y])
        var = float(grad @ _hac_lrv(v) @ grad) / len(x)
        return delta, var

    delta, var = _stat(a, b)
    if var <= 0:
        stat = 0.0 if delta == 0 else math.copysign(math.inf, delta)
        p = 1.0 if delta == 0 else 0.0
        return SharpeTestResult(delta, stat, p)
    stat = delta / math.sqrt(var)
    p = float(2.0 * sps.norm.sf(abs(stat)))

    if bootstrap:
        rng = np.random.default_rng(seed)
        n_blocks = math.ceil(t_len / block_length)
        count = 0
        used = 0
        for _ in range(bootstrap_reps):
            starts = rng.integers(0, t_len, size=n_blocks)
            idx = (starts[:, None] + np.arange(block_length)[None, :]).ravel() % t_len
            idx = idx[:t_len]
            d_star, v_star = _stat(a[idx], b[idx])
            if v_star <= 0:
                continue
            used += 1
            if abs((d_star - delta) / math.sqrt(v_star)) >= abs(stat):
                count += 1
        if used:
            p = (count + 1) / (used + 1)
    return SharpeTestResult(delta, stat, float(p))


@dataclass(frozen=True)
class BrownForsytheResult:
    f_star: float
    p_value: float


def brown_forsythe(series_a, series_b) -> BrownForsytheResult:
    """Levene-type F* test on absolute deviations from group medians."""
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if a.size < 10 or b.size < 10:
        raise StatsError("need at least 10 observations per group")
    za = np.abs(a - np.median(a))
    zb = np.abs(b - np.median(b))
    n_a, n_b = za.size, zb.size
    mean_a, mean_b = za.mean(), zb.mean()
    grand = (za.sum() + zb.sum()) / (n_a + n_b)
    ss_between = n_a * (mean_a - grand) ** 2 + n_b * (mean_b - grand) ** 2
    ss_within = float(((za - mean_a) ** 2).sum() + ((zb - mean_b) ** 2).sum())
    df2 = n_a + n_b - 2
    if ss_within == 0.0:
        f_star = 0.0 if ss_between == 0.0 else math.inf
    else:
        f_star = ss_between / (ss_within / df2)
    p = float(sps.f.sf(f_star, 1, df2)) if math.isfinite(f_star) else 0.0
    return BrownForsytheResult(float(f_star), p)


def forecast_errors(weights, returns, mean_returns) -> np.ndarray:
    """Per-period gap between realized and mean-implied portfolio return."""
    w = np.asarray(weights, dtype=float)
    r = np.asarray(returns, dtype=float)
    mu = np.asarray(mean_returns, dtype=float)
    if w.shape != r.shape or w.shape[1] != mu.size:
        raise StatsError("forecast_errors: mismatched shapes")
    return (w * r).sum(axis=1) - w @ mu


@dataclass(frozen=True)
class DieboldMarianoResult:
    stat: float
    p_value: float


def diebold_mariano(err_a, err_b) -> DieboldMarianoResult:
    """Equal-accuracy test on squared forecast errors.

    The loss differential d = e_a^2 - e_b^2 gets a Newey-West long-run
    variance with bandwidth floor(4 (n/100)^(2/9)).
    """
    a = np.asarray(err_a, dtype=float)
    b = np.asarray(err_b, dtype=float)
    if a.shape != b.shape:
        raise StatsError("series must have equal length")
    n = a.size
    if n < 50:
        raise StatsError("need at least 50 paired observations")
    d = a * a - b * b
    mean_d = float(d.mean())
    centered = d - mean_d
    lag_max = int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))
    lrv = float(centered @ centered) / n
    for j in range(1, min(lag_max, n - 1) + 1):
        gamma = float(centered[j:] @ centered[:-j]) / n
        lrv += 2.0 * (1.0 - j / (lag_max + 1.0)) * gamma
    var_mean = lrv / n
    if var_mean <= 0:
        stat = 0.0 if mean_d == 0 else math.copysign(math.inf, mean_d)
        return DieboldMarianoResult(stat, 1.0 if mean_d == 0 else 0.0)
    stat = mean_d / math.sqrt(var_mean)
    return DieboldMarianoResult(float(stat), float(2.0 * sps.norm.sf(abs(stat))))


@dataclass(frozen=True)
class MetricReport:
    """Criteria and benchmark-relative p-values for one (model, strategy)."""

    model_id: str
    strategy_id: str
    sharpe: float
    sharpe_net: float
    volatility: float
    p_sharpe: float | None = None
    p_sharpe_net: float | None = None
    p_vol_bf: float | None = None
    p_vol_dm: float | None = None
    sharpe_better: bool | None = None
    sharpe_net_better: bool | None = None
    vol_better: bool | None = None
    extra: dict[str, Any] = field(default_factory=dict)


def compare_with_benchmark(
    model_id: str,
    strategy_id: str,
    gross,
    net,
    bench_gross,
    bench_net,
    weights=None,
    bench_weights=None,
    asset_returns=None,
) -> MetricReport:
    """All criteria of one strategy path against the naive benchmark.

    When the weight histories and realized asset returns are supplied the
    Diebold-Mariano comparison of squared forecast errors is included.
    """
    rep = {
        "sharpe": sharpe(gross),
        "sharpe_net": sharpe(net),
        "volatility": volatility(gross),
    }
    bench_sharpe = sharpe(bench_gross)
    bench_sharpe_net = sharpe(bench_net)
    bench_vol = volatility(bench_gross)
    p_sharpe = lw_sharpe_test(gross, bench_gross).p_value
    p_sharpe_net = lw_sharpe_test(net, bench_net).p_value
    p_vol_bf = brown_forsythe(gross, bench_gross).p_value
    p_vol_dm = None
    if weights is not None and bench_weights is not None and asset_returns is not None:
        mean_ret = np.asarray(asset_returns, dtype=float).mean(axis=0)
        e_model = forecast_errors(weights, asset_returns, mean_ret)
        e_bench = forecast_errors(bench_weights, asset_returns, mean_ret)
        p_vol_dm = diebold_mariano(e_model, e_bench).p_value
    return MetricReport(
        model_id=model_id,
        strategy_id=strategy_id,
        sharpe=rep["sharpe"],
        sharpe_net=rep["sharpe_net"],
        volatility=rep["volatility"],
        p_sharpe=p_sharpe,
        p_sharpe_net=p_sharpe_net,
        p_vol_bf=p_vol_bf,
        p_vol_dm=p_vol_dm,
        sharpe_better=rep["sharpe"] > bench_sharpe,
        sharpe_net_better=rep["sharpe_net"] > bench_sharpe_net,
        vol_better=rep["volatility"] < bench_vol,
        extra={
            "naive_sharpe": bench_sharpe,
            "naive_sharpe_net": bench_sharpe_net,
            "naive_volatility": bench_vol,
        },
    )
