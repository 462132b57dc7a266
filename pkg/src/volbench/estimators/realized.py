"""Realized covariance from daily returns inside completed periods."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .base import EstimationError


def realized_matrix(days: np.ndarray) -> np.ndarray:
    """Sum of daily return outer products over one period (not demeaned)."""
    d = np.atleast_2d(np.asarray(days, dtype=float))
    if d.shape[0] < 1:
        raise EstimationError("realized matrix needs at least one day")
    return d.T @ d


def rcov(trailing_daily: Sequence[np.ndarray], smooth: int = 1) -> tuple[np.ndarray, dict]:
    """Random-walk realized-covariance forecast from trailing periods.

    ``trailing_daily`` holds the daily return matrices of the completed
    periods preceding the target, most recent last.  The forecast is the
    realized matrix of the most recent period.  A most-recent period with
    fewer than two days falls back to the previous period's matrix
    (flagged); ``smooth`` > 1 averages the most recent ``smooth`` usable
    realized matrices instead.
    """
    groups = [np.atleast_2d(np.asarray(d, dtype=float)) for d in trailing_daily]
    groups = [g for g in groups if g.shape[0] >= 1]
    if not groups:
        raise EstimationError("realized covariance needs daily companion data")

    groups = groups[::-1]  # most recent first
    full = [realized_matrix(g) for g in groups if g.shape[0] >= 2]
    fell_back = groups[0].shape[0] < 2
    if full:
        chosen = full[:smooth]
    else:
        # nothing with >= 2 days anywhere: the most recent rank-one matrix stands
        chosen = [realized_matrix(groups[0])]
        fell_back = groups[0].shape[0] < 2 and len(groups) > 1
    sigma = sum(chosen) / len(chosen)
    diagnostics = {"periods_used": len(chosen), "short_period_fallback": fell_back}
    return sigma, diagnostics
