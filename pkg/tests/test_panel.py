import datetime as dt
import io

import numpy as np
import pytest

from volbench import panel as pm
from conftest import make_daily_panel, weekday_dates

SIMPLE = b"""date,X,Y
20200106,1.00,-0.50
20200107,0.25,0.10
20200108,-0.10,2.00
"""


def test_load_percent_conversion():
    p = pm.load_returns(SIMPLE, pm.LoadSchema(percent=True, frequency="daily"))
    assert p.assets == ("X", "Y")
    assert p.returns[0, 0] == 0.01
    assert p.returns[0, 1] == -0.005
    assert p.frequency == "daily"
    assert p.dropped_rows == 0


def test_sentinel_rows_dropped():
    raw = b"date,X,Y\n20200106,1.0,2.0\n20200107,-99.99,1.0\n20200108,0.5,0.5\n"
    p = pm.load_returns(raw, pm.LoadSchema())
    assert p.n_periods == 2
    assert p.dropped_rows == 1


def test_dates_parsed_strictly_increasing():
    p = pm.load_returns(SIMPLE, pm.LoadSchema())
    assert p.dates[0] == dt.date(2020, 1, 6)
    assert all(a < b for a, b in zip(p.dates, p.dates[1:]))


def test_bad_date_names_row():
    raw = b"date,X,Y\n20200106,1,2\nnotadate,3,4\n"
    with pytest.raises(pm.PanelError, match="row 2"):
        pm.load_returns(raw, pm.LoadSchema())


def test_bad_cell_names_row_and_column():
    raw = b"date,X,Y\n20200106,1,2\n20200107,3,oops\n"
    with pytest.raises(pm.PanelError, match="row 2.*'Y'"):
        pm.load_returns(raw, pm.LoadSchema())


def test_fewer_than_two_assets_rejected():
    raw = b"date,X\n20200106,1\n"
    with pytest.raises(pm.PanelError, match="fewer than 2"):
        pm.load_returns(raw, pm.LoadSchema())


def test_return_below_minus_one_rejected():
    raw = b"date,X,Y\n20200106,-150.0,1.0\n"
    with pytest.raises(pm.PanelError, match="-100%"):
        pm.load_returns(raw, pm.LoadSchema())


def test_monthly_date_format():
    raw = b"date,X,Y\n196307,1.0,1.0\n196308,2.0,2.0\n"
    p = pm.load_returns(raw, pm.LoadSchema(frequency="monthly"))
    assert p.dates[0] == dt.date(1963, 7, 31)
    assert p.dates[1] == dt.date(1963, 8, 31)


def test_french_library_layout():
    raw = b"""  10 Industry Portfolios -- Daily
  Average Value Weighted Returns -- Daily

        ,NoDur,Durbl
19630701,  0.71, -0.27
19630702,  0.22,  0.10

  Average Equal Weighted Returns -- Daily

        ,NoDur,Durbl
19630701,  9.99,  9.99
19630702,  9.99,  9.99
"""
    p = pm.load_french_library(raw)
    assert p.assets == ("NoDur", "Durbl")
    assert p.n_periods == 2
    assert p.returns[0, 0] == pytest.approx(0.0071)
    assert p.frequency == "daily"
    eq = pm.load_french_library(raw, block=1)
    assert eq.returns[0, 0] == pytest.approx(0.0999)


class TestScaleFrequency:
    def test_single_day_week_identity(self):
        panel = make_daily_panel(1, 2, seed=1)
        panel = pm.ReturnPanel(
            panel.dates, panel.assets, np.full((1, 2), 0.02), "daily"
        )
        weekly = pm.scale_frequency(panel, "weekly")
        assert weekly.returns[0, 0] == pytest.approx(0.02, abs=1e-15)

    def test_zero_week_stays_zero(self):
        dates = tuple(weekday_dates(dt.date(2020, 1, 6), 5))
        panel = pm.ReturnPanel(dates, ("X", "Y"), np.zeros((5, 2)), "daily")
        weekly = pm.scale_frequency(panel, "weekly")
        assert weekly.n_periods == 1
        assert np.all(weekly.returns == 0.0)

    def test_geometric_formula_oracle(self):
        # frozen via mpmath at 50 digits: (1.01*0.99)**(1/2) - 1
        expected = -5.000125006250390652e-05
        dates = tuple(weekday_dates(dt.date(2020, 1, 6), 2))
        panel = pm.ReturnPanel(
            dates, ("X", "Y"), np.array([[0.01, 0.0], [-0.01, 0.0]]), "daily"
        )
        weekly = pm.scale_frequency(panel, "weekly")
        assert weekly.returns[0, 0] == pytest.approx(expected, abs=1e-15)

    def test_compound_switch(self):
        dates = tuple(weekday_dates(dt.date(2020, 1, 6), 2))
        panel = pm.ReturnPanel(
            dates, ("X", "Y"), np.array([[0.01, 0.0], [-0.01, 0.0]]), "daily"
        )
        weekly = pm.scale_frequency(panel, "weekly", method="compound")
        assert weekly.returns[0, 0] == pytest.approx(1.01 * 0.99 - 1.0, abs=1e-15)

    def test_weeks_stamped_by_last_trading_day(self):
        panel = make_daily_panel(10, 2, seed=2, start=dt.date(2020, 1, 6))
        weekly = pm.scale_frequency(panel, "weekly")
        assert weekly.dates[0] == dt.date(2020, 1, 10)   # Friday
        assert weekly.dates[1] == dt.date(2020, 1, 17)

    def test_monthly_grouping(self):
        panel = make_daily_panel(45, 2, seed=3, start=dt.date(2020, 1, 1))
        monthly = pm.scale_frequency(panel, "monthly")
        assert monthly.frequency == "monthly"
        assert [d.month for d in monthly.dates][:2] == [1, 2]

    def test_round_trip_zeros_any_frequency(self):
        dates = tuple(weekday_dates(dt.date(2020, 1, 1), 60))
        panel = pm.ReturnPanel(dates, ("X", "Y"), np.zeros((60, 2)), "daily")
        for target in ("weekly", "monthly"):
            scaled = pm.scale_frequency(panel, target)
            assert np.all(scaled.returns == 0.0)

    def test_only_daily_panels_scale(self, weekly_panel):
        with pytest.raises(pm.PanelError, match="daily"):
            pm.scale_frequency(weekly_panel, "monthly")


class TestRollingWindows:
    def test_counts_and_targets(self, weekly_panel):
        slices = list(pm.rolling_windows(weekly_panel, 100))
        p = weekly_panel.n_periods
        assert len(slices) == p - 100
        assert [s.target_index for s in slices] == list(range(100, p))

    def test_window_rows_precede_target(self, weekly_panel):
        s = next(iter(pm.rolling_windows(weekly_panel, 100)))
        assert s.window.shape == (100, weekly_panel.n_assets)
        np.testing.assert_array_equal(
            s.window, weekly_panel.returns[:100]
        )

    def test_p_equal_m_is_error(self, weekly_panel):
        with pytest.raises(pm.PanelError, match="insufficient history"):
            list(pm.rolling_windows(weekly_panel, weekly_panel.n_periods))

    def test_target_indices_partition(self, weekly_panel):
        slices = list(pm.rolling_windows(weekly_panel, 150))
        targets = [s.target_index for s in slices]
        assert sorted(set(targets)) == targets == list(
            range(150, weekly_panel.n_periods)
        )

    def test_weekly_2896_count(self):
        # generated calendar fixture with exactly 2896 weekly periods
        daily = make_daily_panel(2896 * 5, 2, seed=4, start=dt.date(1963, 7, 1))
        weekly = pm.scale_frequency(daily, "weekly")
        assert weekly.n_periods == 2896
        slices = list(pm.rolling_windows(weekly, 520))
        assert len(slices) == 2376

    def test_daily_companion_attached(self):
        daily = make_daily_panel(200, 2, seed=5)
        weekly = pm.scale_frequency(daily, "weekly")
        slices = list(pm.rolling_windows(weekly, 30, daily=daily))
        s = slices[0]
        assert s.daily_target is not None
        assert s.trailing_daily is not None
        # the target group compounds back to the weekly return
        log1p = np.log1p(s.daily_target)
        np.testing.assert_allclose(
            np.expm1(log1p.mean(axis=0)),
            weekly.returns[s.target_index],
            atol=1e-15,
        )
        # trailing groups are the window's most recent periods
        np.testing.assert_allclose(
            np.expm1(np.log1p(s.trailing_daily[-1]).mean(axis=0)),
            weekly.returns[s.target_index - 1],
            atol=1e-15,
        )

    def test_companion_gap_detected(self):
        daily = make_daily_panel(200, 2, seed=6)
        weekly = pm.scale_frequency(daily, "weekly")
        truncated = pm.ReturnPanel(
            daily.dates[:150], daily.assets, daily.returns[:150], "daily"
        )
        with pytest.raises(pm.PanelError, match="does not cover"):
            list(pm.rolling_windows(weekly, 30, daily=truncated))


def test_canonical_round_trip_bit_exact(weekly_panel):
    text = pm.to_canonical_csv(weekly_panel)
    again = pm.from_canonical_csv(text.encode())
    assert again.dates == weekly_panel.dates
    assert again.assets == weekly_panel.assets
    assert again.frequency == weekly_panel.frequency
    assert np.array_equal(again.returns, weekly_panel.returns)
    # idempotence: emitting the reloaded panel reproduces the bytes
    assert pm.to_canonical_csv(again) == text


def test_write_canonical_csv(tmp_path, weekly_panel):
    path = tmp_path / "panel.csv"
    pm.write_canonical_csv(weekly_panel, path)
    again = pm.from_canonical_csv(path)
    assert np.array_equal(again.returns, weekly_panel.returns)
