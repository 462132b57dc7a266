import datetime as dt

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import volbench

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def weekday_dates(start: dt.date, count: int) -> list[dt.date]:
    """First ``count`` weekdays on/after ``start`` (synthetic trading calendar)."""
    out = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day)
        day += dt.timedelta(days=1)
    return out


def make_daily_panel(
    n_days: int,
    n_assets: int,
    seed: int = 0,
    scale: float = 0.01,
    drift: float = 0.0005,
    start: dt.date = dt.date(2001, 1, 1),
) -> volbench.ReturnPanel:
    rng = np.random.default_rng(seed)
    rets = rng.standard_normal((n_days, n_assets)) * scale + drift
    labels = tuple(f"A{i}" for i in range(n_assets))
    return volbench.ReturnPanel(
        tuple(weekday_dates(start, n_days)), labels, rets, "daily"
    )


def make_weekly_panel(n_weeks: int, n_assets: int, seed: int = 0, **kw):
    daily = make_daily_panel(n_weeks * 5, n_assets, seed=seed, **kw)
    return volbench.scale_frequency(daily, "weekly")


@pytest.fixture
def daily_panel():
    return make_daily_panel(300, 3, seed=11)


@pytest.fixture
def weekly_panel():
    return make_weekly_panel(180, 3, seed=12)
