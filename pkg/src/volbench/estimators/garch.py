"""GARCH(1,1) margins and the BEKK / conditional-correlation family."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .base import EstimationError, ModelConfig, demean
from .kernels import bekk_filter, dcc_filter, garch11_filter

_GARCH_STARTS = ((0.05, 0.90), (0.10, 0.85), (0.02, 0.95), (0.20, 0.70), (0.01, 0.40))
_DCC_STARTS = ((0.05, 0.90), (0.02, 0.95), (0.10, 0.80))


@dataclass(frozen=True)
class Garch11Fit:
    omega: float
    alpha: float
    beta: float
    last_variance: float
    next_variance: float
    variance_path: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    loglik_path: tuple[float, ...]


def garch11_loglik(params, series) -> float:
    """Gaussian GARCH(1,1) log-likelihood at natural-unit parameters.

    The series is demeaned internally and the recursion starts at the
    sample variance of the demeaned series.
    """
    omega, alpha, beta = (float(v) for v in params)
    eps = np.asarray(series, dtype=float)
    eps = eps - eps.mean()
    s2 = float(eps.var(ddof=1))
    ll, *_ = garch11_filter(eps, omega, alpha, beta, s2)
    return float(ll)


def garch11_score(params, series) -> np.ndarray:
    """Analytic gradient of :func:`garch11_loglik` w.r.t. (omega, alpha, beta)."""
    omega, alpha, beta = (float(v) for v in params)
    eps = np.asarray(series, dtype=float)
    eps = eps - eps.mean()
    s2 = float(eps.var(ddof=1))
    _, g_w, g_a, g_b, _, _ = garch11_filter(eps, omega, alpha, beta, s2)
    return np.array([g_w, g_a, g_b])


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def garch11_fit(series, config: ModelConfig = ModelConfig()) -> Garch11Fit:
    """Quasi-MLE of a Gaussian GARCH(1,1) on the demeaned series.

    The constraints omega > 0, alpha, beta >= 0, alpha + beta < 1 are
    enforced through a transformed parameterization (log variance share /
    logistic persistence); starts use variance targeting and additional
    restarts kick in on failure.
    """
    x = np.asarray(series, dtype=float).ravel()
    m = x.size
    if m < config.garch_min_obs:
        raise EstimationError(
            f"insufficient history for GARCH: {m} < {config.garch_min_obs}"
        )
    mean = x.mean()
    eps = x - mean
    s2 = float(eps.var(ddof=1))
    if s2 <= 0:
        raise EstimationError("constant series: GARCH variance undefined")
    scaled = eps / math.sqrt(s2)

    def unpack(theta):
        omega = math.exp(theta[0])
        persistence = _sigmoid(theta[1])
        share = _sigmoid(theta[2])
        return omega, persistence * share, persistence * (1.0 - share)

    def nll_grad(theta):
        omega, alpha, beta = unpack(theta)
        ll, g_w, g_a, g_b, _, _ = garch11_filter(scaled, omega, alpha, beta, 1.0)
        persistence = _sigmoid(theta[1])
        share = _sigmoid(theta[2])
        d_u = (g_a * share + g_b * (1.0 - share)) * persistence * (1.0 - persistence)
        d_v = (g_a - g_b) * persistence * share * (1.0 - share)
        return -ll, -np.array([g_w * omega, d_u, d_v])

    best = None
    path: list[float] = []
    total_iters = 0
    for alpha0, beta0 in _GARCH_STARTS[: config.optimizer.restarts + 1]:
        pers = alpha0 + beta0
        theta0 = np.array(
            [math.log(max(1.0 - pers, 1e-4)), _logit(pers), _logit(alpha0 / pers)]
        )
        trace: list[float] = [-nll_grad(theta0)[0]]
        res = optimize.minimize(
            nll_grad,
            theta0,
            jac=True,
            method="BFGS",
            callback=lambda tk: trace.append(-nll_grad(tk)[0]),
            options={
                "maxiter": config.optimizer.max_iter,
                "gtol": config.optimizer.gradient_tol,
            },
        )
        total_iters += res.nit
        # BFGS often reports precision loss at an essentially converged
        # point; accept any iterate with a small transformed-space gradient
        grad_ok = float(np.max(np.abs(res.jac))) < 0.05
        if (res.success or grad_ok) and np.isfinite(res.fun):
            if best is None or res.fun < best[0]:
                best = (res.fun, res.x, res.nit, trace)
    if best is None:
        raise EstimationError(
            "GARCH(1,1) failed to converge",
            {"iterations": total_iters, "starts": len(_GARCH_STARTS)},
        )
    _, theta, nit, path = best
    omega_s, alpha, beta = unpack(theta)
    ll, _, _, _, last_s, next_s = garch11_filter(scaled, omega_s, alpha, beta, 1.0)

    # reconstruct the in-sample variance path (natural units)
    var_path = np.empty(m)
    var_path[0] = 1.0
    for t in range(1, m):
        var_path[t] = omega_s + alpha * scaled[t - 1] ** 2 + beta * var_path[t - 1]
    var_path *= s2

    ll_nat = float(ll) - 0.5 * m * math.log(s2)
    return Garch11Fit(
        omega=omega_s * s2,
        alpha=alpha,
        beta=beta,
        last_variance=last_s * s2,
        next_variance=next_s * s2,
        variance_path=var_path,
        loglik=ll_nat,
        iterations=nit,
        converged=True,
        loglik_path=tuple(v - 0.5 * m * math.log(s2) for v in path),
    )


def _normalize_corr(q: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(q))
    r = q / np.outer(d, d)
    np.fill_diagonal(r, 1.0)
    return 0.5 * (r + r.T)


def fit_margins(window: np.ndarray, config: ModelConfig):
    """Per-column GARCH(1,1) fits, standardized residuals, forecast sds."""
    w = np.asarray(window, dtype=float)
    _, centered = demean(w)
    fits = [garch11_fit(w[:, i], config) for i in range(w.shape[1])]
    sd_path = np.column_stack([np.sqrt(f.variance_path) for f in fits])
    z = centered / sd_path
    d_next = np.array([math.sqrt(f.next_variance) for f in fits])
    return fits, z, d_next


def ccc_cov(window: np.ndarray, config: ModelConfig = ModelConfig()):
    """Constant conditional correlation: GARCH margins, static correlation."""
    w = np.asarray(window, dtype=float)
    if w.shape[1] == 1:
        fit = garch11_fit(w[:, 0], config)
        return np.array([[fit.next_variance]]), {"loglik": fit.loglik, "converged": True}
    fits, z, d_next = fit_margins(w, config)
    qbar = z.T @ z / z.shape[0]
    corr = _normalize_corr(qbar)
    sigma = corr * np.outer(d_next, d_next)
    diagnostics = {
        "loglik": float(sum(f.loglik for f in fits)),
        "converged": all(f.converged for f in fits),
        "iterations": int(sum(f.iterations for f in fits)),
    }
    return 0.5 * (sigma + sigma.T), diagnostics


def dcc_cov(
    window: np.ndarray,
    config: ModelConfig = ModelConfig(),
    asymmetric: bool = False,
    params: tuple[float, ...] | None = None,
):
    """(A)DCC(1,1): second-stage correlation quasi-MLE on GARCH residuals.

    ``params`` overrides the optimized (a, b[, g]) — used to pin the
    recursion in reductions and tests.
    """
    w = np.asarray(window, dtype=float)
    if w.shape[1] == 1:
        fit = garch11_fit(w[:, 0], config)
        return np.array([[fit.next_variance]]), {"loglik": fit.loglik, "converged": True}
    fits, z, d_next = fit_margins(w, config)
    m, n = z.shape
    zneg = np.minimum(z, 0.0)
    qbar = z.T @ z / m
    nbar = zneg.T @ zneg / m

    # largest eta such that (1-a-b)*qbar - g*nbar stays PSD: a+b+delta*g < 1
    lo = np.linalg.cholesky(qbar + 1e-12 * np.trace(qbar) * np.eye(n))
    inner = np.linalg.solve(lo, np.linalg.solve(lo, nbar).T).T
    delta = float(np.linalg.eigvalsh(0.5 * (inner + inner.T))[-1]) if asymmetric else 0.0

    npar = 3 if asymmetric else 2
    diagnostics: dict = {"asymmetric": asymmetric}

    if params is not None:
        vals = tuple(float(v) for v in params)
        a, b = vals[0], vals[1]
        g = vals[2] if len(vals) > 2 else 0.0
        diagnostics["fixed_params"] = True
        converged = True
        iters = 0
    else:
        def nll(x):
            a_, b_ = x[0], x[1]
            g_ = x[2] if npar == 3 else 0.0
            ll, grad, _ = dcc_filter(z, zneg, qbar, nbar, a_, b_, g_, True)
            return -ll, -grad[:npar]

        constraints = [
            {
                "type": "ineq",
                "fun": lambda x: 1.0 - 1e-6 - x[0] - x[1] - (delta * x[2] if npar == 3 else 0.0),
                "jac": lambda x: (
                    np.array([-1.0, -1.0, -delta]) if npar == 3 else np.array([-1.0, -1.0])
                ),
            }
        ]
        bounds = [(0.0, 0.9999)] * npar
        best = None
        iters = 0
        for a0, b0 in _DCC_STARTS[: config.optimizer.restarts + 1]:
            x0 = np.array([a0, b0, 0.02][:npar])
            res = optimize.minimize(
                nll,
                x0,
                jac=True,
                method="SLSQP",
                bounds=bounds,
                constraints=constraints,
                options={"maxiter": config.optimizer.max_iter, "ftol": 1e-10},
            )
            iters += res.nit
            if np.isfinite(res.fun) and res.success:
                if best is None or res.fun < best[0]:
                    best = (res.fun, res.x, True)
        if best is None:
            raise EstimationError("DCC optimization failed", {"iterations": iters})
        _, x_opt, converged = best
        a, b = float(x_opt[0]), float(x_opt[1])
        g = float(x_opt[2]) if npar == 3 else 0.0

    # targeting intercept must stay PSD; shrink g toward zero if it is not
    shrunk = False
    while g > 0:
        c0 = (1.0 - a - b) * qbar - g * nbar
        if np.linalg.eigvalsh(c0)[0] >= -1e-12 * max(1.0, np.trace(qbar) / n):
            break
        g *= 0.8
        shrunk = True
        if g < 1e-12:
            g = 0.0
    diagnostics["g_shrunk"] = shrunk

    ll, _, q_last = dcc_filter(z, zneg, qbar, nbar, a, b, g, False)
    c0 = (1.0 - a - b) * qbar - g * nbar
    q_next = c0 + a * np.outer(z[-1], z[-1]) + b * q_last + g * np.outer(zneg[-1], zneg[-1])
    corr = _normalize_corr(q_next)
    sigma = corr * np.outer(d_next, d_next)
    diagnostics.update(
        {
            "a": a,
            "b": b,
            "g": g,
            "loglik": float(ll) + float(sum(f.loglik for f in fits)),
            "converged": bool(converged) and all(f.converged for f in fits),
            "iterations": int(iters) + int(sum(f.iterations for f in fits)),
        }
    )
    return 0.5 * (sigma + sigma.T), diagnostics


def _bekk_param_count(n: int, asymmetric: bool) -> int:
    return n * (n + 1) // 2 + 2 * n * n + (n * n if asymmetric else 0)


def _pack_lower(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    return c[np.tril_indices(n)]


def _unpack_lower(v: np.ndarray, n: int) -> np.ndarray:
    c = np.zeros((n, n))
    c[np.tril_indices(n)] = v
    return c


def bekk_cov(
    window: np.ndarray,
    config: ModelConfig = ModelConfig(),
    asymmetric: bool = False,
):
    """Full (A)BEKK(1,1) quasi-MLE with variance-targeting initialization.

    Covariance stationarity (spectral radius of the vectorized recursion
    below one) is enforced through a likelihood penalty; the returned
    matrix is the one-step forecast H_{T+1}.
    """
    w = np.asarray(window, dtype=float)
    m, n = w.shape
    if n > 12:
        raise EstimationError(f"BEKK limited to 12 assets, got {n}")
    n_params = _bekk_param_count(n, asymmetric)
    if m < 2 * n_params:
        raise EstimationError(
            f"insufficient history for parameter count: {m} rows, {n_params} parameters"
        )
    _, eps = demean(w)
    sbar = eps.T @ eps / m
    scale = math.sqrt(float(np.trace(sbar)) / n)
    eps = eps / scale
    sbar = sbar / scale**2

    def unpack(theta):
        k = n * (n + 1) // 2
        c = _unpack_lower(theta[:k], n)
        a = theta[k : k + n * n].reshape(n, n)
        b = theta[k + n * n : k + 2 * n * n].reshape(n, n)
        g = (
            theta[k + 2 * n * n : k + 3 * n * n].reshape(n, n)
            if asymmetric
            else np.zeros((n, n))
        )
        return c, a, b, g

    def spectral_radius(a, b, g):
        k = np.kron(a, a) + np.kron(b, b)
        if asymmetric:
            k = k + 0.5 * np.kron(g, g)
        return float(np.abs(np.linalg.eigvals(k)).max())

    def nll(theta):
        c, a, b, g = unpack(theta)
        rho = spectral_radius(a, b, g)
        penalty = 0.0
        if rho >= 0.999:
            penalty = 1e4 * m * (rho - 0.999) ** 2
        ll, _ = bekk_filter(eps, c @ c.T, a, b, g, asymmetric, sbar)
        if ll <= -1e99:
            return 1e12
        return -ll + penalty

    def start_theta(a_diag, b_diag, g_diag):
        a0 = a_diag * np.eye(n)
        b0 = b_diag * np.eye(n)
        g0 = g_diag * np.eye(n)
        cc0 = sbar - a0 @ sbar @ a0.T - b0 @ sbar @ b0.T
        if asymmetric:
            cc0 = cc0 - 0.5 * g0 @ sbar @ g0.T
        if np.linalg.eigvalsh(cc0)[0] <= 0:
            cc0 = 0.05 * sbar
        c0 = np.linalg.cholesky(cc0)
        parts = [_pack_lower(c0), a0.ravel(), b0.ravel()]
        if asymmetric:
            parts.append(g0.ravel())
        return np.concatenate(parts)

    starts = [(0.2, 0.9, 0.1), (0.3, 0.8, 0.05), (0.1, 0.95, 0.1)]
    best = None
    iters = 0
    for a_d, b_d, g_d in starts[: config.optimizer.restarts + 1]:
        theta0 = start_theta(a_d, b_d, g_d)
        res = optimize.minimize(
            nll,
            theta0,
            method="L-BFGS-B",
            options={"maxiter": config.optimizer.max_iter, "ftol": 1e-12, "gtol": 1e-7},
        )
        iters += res.nit
        if np.isfinite(res.fun) and res.fun < 1e11:
            if best is None or res.fun < best[0]:
                best = (res.fun, res.x, res.success)
        if best is not None and best[2]:
            break
    if best is None:
        raise EstimationError("BEKK optimization failed", {"iterations": iters})
    fun, theta, success = best
    c, a, b, g = unpack(theta)
    ll, h_next = bekk_filter(eps, c @ c.T, a, b, g, asymmetric, sbar)
    sigma = h_next * scale**2
    diagnostics = {
        "loglik": float(ll) - m * n * math.log(scale),
        "iterations": int(iters),
        "converged": bool(success),
        "spectral_radius": spectral_radius(a, b, g),
        "intercept": c @ c.T * scale**2,
        "a_matrix": a,
        "b_matrix": b,
        "g_matrix": g if asymmetric else None,
        "asymmetric": asymmetric,
    }
    return 0.5 * (sigma + sigma.T), diagnostics
