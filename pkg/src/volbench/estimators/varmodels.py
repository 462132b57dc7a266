"""Vector autoregression, Johansen trace test, and error-correction models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import EstimationError

# 5% critical values of the cointegration trace statistic for n - r =
# 1..12, model with unrestricted intercept and no trend (MacKinnon, Haug
# and Michelis 1999).
TRACE_CRIT_5PCT = (
    3.841466,
    15.49471,
    29.79707,
    47.85613,
    69.81889,
    95.75366,
    125.6154,
    159.5297,
    197.3709,
    239.2354,
    285.1425,
    334.9837,
)


@dataclass(frozen=True)
class VarFit:
    intercept: np.ndarray        # (N,)
    coefficients: np.ndarray     # (p, N, N), coefficients[k] multiplies lag k+1
    residual_cov: np.ndarray     # (N, N)
    one_step_mean: np.ndarray    # (N,)
    coefficient_se: np.ndarray   # (p, N, N) standard errors
    ridge: bool


def _lagged_design(y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    m, n = y.shape
    t_eff = m - p
    x = np.empty((t_eff, 1 + n * p))
    x[:, 0] = 1.0
    for k in range(p):
        x[:, 1 + k * n : 1 + (k + 1) * n] = y[p - 1 - k : m - 1 - k]
    return x, y[p:]


def _solve_ols(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Least squares via normal equations with a ridge fallback.

    Returns (coefficients, xtx_inv, ridge_used); the penalty added on
    singularity is 1e-8 times trace(X'X).
    """
    xtx = x.T @ x
    xty = x.T @ y
    ridge = False
    try:
        if np.linalg.cond(xtx) > 1e12:
            raise np.linalg.LinAlgError
        beta = np.linalg.solve(xtx, xty)
        xtx_inv = np.linalg.inv(xtx)
    except np.linalg.LinAlgError:
        ridge = True
        penalty = 1e-8 * np.trace(xtx)
        xtx = xtx + penalty * np.eye(xtx.shape[0])
        beta = np.linalg.solve(xtx, xty)
        xtx_inv = np.linalg.inv(xtx)
    return beta, xtx_inv, ridge


def var_fit(window: np.ndarray, p: int) -> VarFit:
    """Equation-by-equation least squares VAR(p) with intercept.

    The residual covariance uses divisor M - N*p - 1 and the one-step mean
    is the fitted forecast from the last p observations.
    """
    if p < 1:
        raise EstimationError(f"invalid VAR order {p}")
    y = np.asarray(window, dtype=float)
    m, n = y.shape
    if m <= n * p + 1:
        raise EstimationError(
            f"insufficient history: {m} rows for VAR({p}) with {n} assets"
        )
    x, target = _lagged_design(y, p)
    beta, xtx_inv, ridge = _solve_ols(x, target)
    resid = target - x @ beta
    dof = m - n * p - 1
    residual_cov = resid.T @ resid / dof

    intercept = beta[0]
    coefficients = np.empty((p, n, n))
    for k in range(p):
        coefficients[k] = beta[1 + k * n : 1 + (k + 1) * n].T

    # per-equation OLS standard errors of the lag coefficients
    sigma_eq = np.diag(residual_cov)
    se = np.empty((p, n, n))
    diag_xtx = np.diag(xtx_inv)
    for k in range(p):
        block = diag_xtx[1 + k * n : 1 + (k + 1) * n]
        se[k] = np.sqrt(np.outer(sigma_eq, block))

    one_step = intercept + sum(coefficients[k] @ y[m - 1 - k] for k in range(p))
    return VarFit(
        intercept=intercept,
        coefficients=coefficients,
        residual_cov=0.5 * (residual_cov + residual_cov.T),
        one_step_mean=one_step,
        coefficient_se=se,
        ridge=ridge,
    )


def _rrr_inputs(y: np.ndarray, p: int):
    """Residual moment matrices of the reduced-rank (Johansen) regression."""
    m, n = y.shape
    dy = np.diff(y, axis=0)
    t_eff = m - p
    z0 = dy[p - 1 :]                      # delta y_t
    z1 = y[p - 1 : m - 1]                 # y_{t-1}
    z2 = np.empty((t_eff, 1 + n * (p - 1)))
    z2[:, 0] = 1.0
    for k in range(p - 1):
        z2[:, 1 + k * n : 1 + (k + 1) * n] = dy[p - 2 - k : m - 2 - k]

    def _partial_out(z):
        beta, _, _ = _solve_ols(z2, z)
        return z - z2 @ beta

    r0 = _partial_out(z0)
    r1 = _partial_out(z1)
    s00 = r0.T @ r0 / t_eff
    s01 = r0.T @ r1 / t_eff
    s11 = r1.T @ r1 / t_eff
    return z0, z1, z2, s00, s01, s11, t_eff


def johansen_trace(window: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and trace statistics of the Johansen procedure."""
    if p < 1:
        raise EstimationError(f"invalid VAR order {p}")
    y = np.asarray(window, dtype=float)
    m, n = y.shape
    if m <= n * p + 1:
        raise EstimationError(
            f"insufficient history: {m} rows for Johansen test with {n} assets"
        )
    if n > len(TRACE_CRIT_5PCT):
        raise EstimationError(f"no trace critical values for {n} variables")
    _, _, _, s00, s01, s11, t_eff = _rrr_inputs(y, p)

    lo = np.linalg.cholesky(s11 + 1e-14 * np.trace(s11) * np.eye(n))
    inner = np.linalg.solve(s00, s01)
    mat = s01.T @ inner                       # S10 S00^-1 S01
    sym = np.linalg.solve(lo, np.linalg.solve(lo, mat).T).T
    eigvals = np.linalg.eigvalsh(0.5 * (sym + sym.T))[::-1]
    eigvals = np.clip(eigvals, 0.0, 1.0 - 1e-12)
    stats = -t_eff * np.cumsum(np.log1p(-eigvals[::-1]))[::-1]
    return eigvals, stats


def johansen_rank(window: np.ndarray, p: int) -> int:
    """Smallest cointegration rank whose trace null is not rejected at 5%."""
    y = np.asarray(window, dtype=float)
    n = y.shape[1]
    _, stats = johansen_trace(y, p)
    for r in range(n):
        if stats[r] < TRACE_CRIT_5PCT[n - r - 1]:
            return r
    return n


@dataclass(frozen=True)
class VecmFit:
    rank: int
    alpha: np.ndarray | None      # (N, r) adjustment loadings
    beta: np.ndarray | None       # (N, r) cointegrating vectors
    residual_cov: np.ndarray
    one_step_mean: np.ndarray
    alpha_se: np.ndarray | None
    ridge: bool


def vecm_fit(window: np.ndarray, p: int, rank: int | None = None) -> VecmFit:
    """Vector error correction fit at the Johansen trace rank.

    Rank 0 degenerates to a VAR(p-1) in differences; rank N to the VAR(p)
    in levels.  Residual covariance divisors follow the VAR convention
    (observations minus parameters per equation).
    """
    y = np.asarray(window, dtype=float)
    m, n = y.shape
    if rank is None:
        rank = johansen_rank(y, p)
    if not 0 <= rank <= n:
        raise EstimationError(f"invalid cointegration rank {rank}")

    if rank == n:
        fit = var_fit(y, p)
        return VecmFit(
            rank=n,
            alpha=None,
            beta=None,
            residual_cov=fit.residual_cov,
            one_step_mean=fit.one_step_mean,
            alpha_se=None,
            ridge=fit.ridge,
        )

    if rank == 0:
        dy = np.diff(y, axis=0)
        if p == 1:
            # random walk with drift: differences are i.i.d. around a mean
            resid = dy - dy.mean(axis=0)
            dof = max(dy.shape[0] - 1, 1)
            cov = resid.T @ resid / dof
            one_step = y[-1] + dy.mean(axis=0)
            return VecmFit(0, None, None, 0.5 * (cov + cov.T), one_step, None, False)
        fit = var_fit(dy, p - 1)
        return VecmFit(
            rank=0,
            alpha=None,
            beta=None,
            residual_cov=fit.residual_cov,
            one_step_mean=y[-1] + fit.one_step_mean,
            alpha_se=None,
            ridge=fit.ridge,
        )

    z0, z1, z2, s00, s01, s11, t_eff = _rrr_inputs(y, p)
    lo = np.linalg.cholesky(s11 + 1e-14 * np.trace(s11) * np.eye(n))
    inner = np.linalg.solve(s00, s01)
    sym = np.linalg.solve(lo, np.linalg.solve(lo, s01.T @ inner).T).T
    vals, vecs = np.linalg.eigh(0.5 * (sym + sym.T))
    order = np.argsort(vals)[::-1]
    beta = np.linalg.solve(lo.T, vecs[:, order[:rank]])   # (N, r)

    # with beta fixed, refit delta y on [ect, const, lagged diffs] by OLS
    ect = z1 @ beta
    design = np.hstack([ect, z2])
    coefs, xtx_inv, ridge = _solve_ols(design, z0)
    resid = z0 - design @ coefs
    dof = m - (rank + n * (p - 1) + 1)
    cov = resid.T @ resid / max(dof, 1)

    alpha = coefs[:rank].T                                # (N, r)
    sigma_eq = np.diag(cov)
    alpha_se = np.sqrt(np.outer(sigma_eq, np.diag(xtx_inv)[:rank]))

    gamma = coefs[rank:]                                  # (1 + N(p-1), N)
    last_ect = y[-1] @ beta
    feats = [last_ect, np.ones(1)]
    dy = np.diff(y, axis=0)
    for k in range(p - 1):
        feats.append(dy[-1 - k])
    d_forecast = np.concatenate(feats) @ np.vstack([alpha.T, gamma])
    one_step = y[-1] + d_forecast
    return VecmFit(
        rank=rank,
        alpha=alpha,
        beta=beta,
        residual_cov=0.5 * (cov + cov.T),
        one_step_mean=one_step,
        alpha_se=alpha_se,
        ridge=ridge,
    )
