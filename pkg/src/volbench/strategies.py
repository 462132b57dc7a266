"""Portfolio weight rules driven by conditional moment estimates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import linalg

STRATEGY_IDS = ("NAIVE", "MVP", "CON_MVP", "VT", "TP")

#: Strategies whose weights are nonnegative by construction or constraint.
LONG_ONLY = frozenset({"NAIVE", "CON_MVP", "VT"})


class StrategyError(ValueError):
    """The moment inputs do not admit a well-defined weight vector."""


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    strategy_id: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if self.strategy_id not in STRATEGY_IDS:
            raise StrategyError(f"unknown strategy {self.strategy_id!r}")
        if w.ndim != 1 or w.size < 1:
            raise StrategyError("weights must be a nonempty vector")
        if not np.all(np.isfinite(w)):
            raise StrategyError("non-finite weights")
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise StrategyError(f"weights sum to {w.sum()!r}, not 1")
        if self.strategy_id in LONG_ONLY and float(w.min()) < -1e-12:
            raise StrategyError("negative weight in a long-only strategy")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def _renormalize(w: np.ndarray) -> np.ndarray:
    return w / float(w.sum())


def _solve_sym(sigma: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Symmetric positive-definite solve; never forms an explicit inverse."""
    try:
        c, low = linalg.cho_factor(sigma, check_finite=False)
        return linalg.cho_solve((c, low), rhs, check_finite=False)
    except linalg.LinAlgError:
        raise StrategyError("degenerate covariance: factorization failed") from None


def naive_weights(n: int) -> WeightVector:
    """Equal allocation 1/N."""
    if n < 1:
        raise StrategyError("need at least one asset")
    return WeightVector(np.full(n, 1.0 / n), "NAIVE")


def mvp_weights(sigma: np.ndarray) -> WeightVector:
    """Budget-constrained minimum variance: w = Sigma^-1 1 / (1' Sigma^-1 1)."""
    sigma = np.asarray(sigma, dtype=float)
    ones = np.ones(sigma.shape[0])
    x = _solve_sym(sigma, ones)
    denom = float(ones @ x)
    if denom <= 1e-12:
        raise StrategyError("degenerate covariance: 1' Sigma^-1 1 not positive")
    return WeightVector(x / denom, "MVP")


def con_mvp_weights(sigma: np.ndarray, tol: float = 1e-9) -> WeightVector:
    """No-short minimum variance via an active-set method.

    Starting from the full free set, the equality-constrained problem is
    solved on the free coordinates; violating coordinates move to the zero
    bound; bound coordinates whose KKT multiplier turns profitable are
    released.  Terminates exactly for positive semidefinite inputs.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    free = np.ones(n, dtype=bool)
    w = np.full(n, 1.0 / n)
    for _ in range(4 * n * n + 8):
        sub = sigma[np.ix_(free, free)]
        ones = np.ones(int(free.sum()))
        x = _solve_sym(sub + 1e-14 * np.trace(sub) * np.eye(ones.size), ones)
        denom = float(ones @ x)
        if denom <= 0:
            raise StrategyError("degenerate covariance on the free set")
        w = np.zeros(n)
        w[free] = x / denom

        if w.min() < -tol:
            # clamp every violating coordinate to the bound and resolve
            free &= ~(w < -tol)
            if not free.any():
                raise StrategyError("active-set emptied the free set")
            continue

        w = np.clip(w, 0.0, None)
        w = _renormalize(w)
        grad = sigma @ w
        lam = float(w @ grad)  # multiplier of the budget constraint
        bound = ~free
        violations = np.where(bound & (grad < lam - tol))[0]
        if violations.size == 0:
            return WeightVector(
                w, "CON_MVP", {"active": tuple(np.where(bound)[0]), "multiplier": lam}
            )
        free[violations[np.argmin(grad[violations])]] = True
    raise StrategyError("active-set iteration limit reached")


def vt_weights(sigma: np.ndarray) -> WeightVector:
    """Volatility timing: weights proportional to inverse conditional variance."""
    diag = np.diag(np.asarray(sigma, dtype=float))
    if np.any(diag <= 0):
        raise StrategyError("nonpositive conditional variance on the diagonal")
    inv = 1.0 / diag
    return WeightVector(inv / inv.sum(), "VT")


def tp_weights(mu: np.ndarray, sigma: np.ndarray) -> WeightVector:
    """Tangency portfolio w = Sigma^-1 mu / (1' Sigma^-1 mu).

    A negative normalizer flips the solution onto the inefficient branch;
    it is flagged in the diagnostics, not corrected.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise StrategyError("non-finite mean forecast")
    x = _solve_sym(sigma, mu)
    denom = float(np.ones(mu.size) @ x)
    if abs(denom) <= 1e-12:
        raise StrategyError("tangency undefined: 1' Sigma^-1 mu is zero")
    return WeightVector(x / denom, "TP", {"negative_normalizer": denom < 0})


def strategy_weights(strategy_id: str, mu: np.ndarray, sigma: np.ndarray) -> WeightVector:
    """Dispatch a strategy id to its weight rule."""
    n = np.asarray(sigma).shape[0]
    if strategy_id == "NAIVE":
        return naive_weights(n)
    if strategy_id == "MVP":
        return mvp_weights(sigma)
    if strategy_id == "CON_MVP":
        return con_mvp_weights(sigma)
    if strategy_id == "VT":
        return vt_weights(sigma)
    if strategy_id == "TP":
        return tp_weights(mu, sigma)
    raise StrategyError(f"unknown strategy {strategy_id!r}")
