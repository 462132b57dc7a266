"""Sample covariance and exponentially weighted moving average."""
from __future__ import annotations

import warnings

import numpy as np

from .base import EstimationError, demean


def sample_cov(window: np.ndarray) -> np.ndarray:
    """Unbiased sample covariance of the demeaned window (divisor M-1)."""
    w = np.asarray(window, dtype=float)
    m, n = w.shape
    if m < 2:
        raise EstimationError(f"sample covariance needs >= 2 observations, got {m}")
    if m <= n:
        warnings.warn(
            f"near-singular sample covariance: {m} observations for {n} assets",
            stacklevel=2,
        )
    _, centered = demean(w)
    return centered.T @ centered / (m - 1)


def ewma_cov(window: np.ndarray, lam: float) -> np.ndarray:
    """Exponentially weighted covariance with truncation renormalization.

    Sigma = (1-lam) * sum_k lam^k x[last-k] x[last-k]' / (1-lam^M) on the
    window-demeaned returns; the division renormalizes the truncated weight
    sequence so the weights sum to one.
    """
    if not 0.0 < lam < 1.0:
        raise EstimationError(f"EWMA decay must lie in (0, 1), got {lam}")
    w = np.asarray(window, dtype=float)
    m = w.shape[0]
    if m < 1:
        raise EstimationError("EWMA needs a non-empty window")
    _, centered = demean(w)
    # weight lam^k on the k-th most recent observation
    weights = lam ** np.arange(m - 1, -1, -1, dtype=float)
    total = (1.0 - lam ** m) / (1.0 - lam)
    sigma = (centered * weights[:, None]).T @ centered / total
    return 0.5 * (sigma + sigma.T)
