"""Return panels: loading delimited files, frequency scaling, rolling windows."""
from __future__ import annotations

import datetime as dt
import os
import warnings
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

FREQUENCIES = ("daily", "weekly", "monthly")

DEFAULT_SENTINELS = (-99.99, -999.0)


class PanelError(ValueError):
    """Raw input cannot be turned into a valid return panel."""


@dataclass(frozen=True)
class ReturnPanel:
    """Aligned T x N matrix of simple per-period returns.

    Rows are periods (strictly increasing dates), columns are assets.
    Returns are decimal (0.01 = 1%) and every cell is > -1.
    """

    dates: tuple[dt.date, ...]
    assets: tuple[str, ...]
    returns: np.ndarray
    frequency: str
    dropped_rows: int = 0

    def __post_init__(self):
        ret = np.ascontiguousarray(np.asarray(self.returns, dtype=float))
        if ret.ndim != 2:
            raise PanelError("returns must be a T x N matrix")
        t, n = ret.shape
        if len(self.dates) != t:
            raise PanelError(f"{len(self.dates)} dates for {t} return rows")
        if len(self.assets) != n:
            raise PanelError(f"{len(self.assets)} asset labels for {n} columns")
        if self.frequency not in FREQUENCIES:
            raise PanelError(f"unknown frequency {self.frequency!r}")
        if not np.all(np.isfinite(ret)):
            raise PanelError("panel contains non-finite returns")
        if np.any(ret <= -1.0):
            bad = int(np.argwhere(ret <= -1.0)[0][0])
            raise PanelError(f"return of -100% or lower in row {bad + 1}")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise PanelError(f"dates not strictly increasing at {cur}")
        ret.flags.writeable = False
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "assets", tuple(str(a) for a in self.assets))
        object.__setattr__(self, "returns", ret)

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class WindowSlice:
    """One estimation window plus the index of the period it must forecast.

    ``window`` holds the M rows strictly preceding ``target_index``.
    ``trailing_daily`` carries the daily returns of the last few window
    periods (most recent last) for realized-covariance estimators;
    ``daily_target`` carries the daily returns inside the target period.
    """

    window: np.ndarray
    target_index: int
    trailing_daily: tuple[np.ndarray, ...] | None = None
    daily_target: np.ndarray | None = None


@dataclass(frozen=True)
class LoadSchema:
    """Column mapping and unit conventions for a delimited return file."""

    date_column: int | str = 0
    asset_columns: tuple[int, ...] | tuple[str, ...] | None = None
    percent: bool = True
    sentinels: tuple[float, ...] = DEFAULT_SENTINELS
    delimiter: str | None = None
    has_header: bool = True
    skip_rows: int = 0
    frequency: str = "daily"


def _decode(source) -> list[str]:
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, "rb") as fh:
            raw = fh.read()
    elif isinstance(source, bytes):
        raw = source
    elif hasattr(source, "read"):
        raw = source.read()
        if isinstance(raw, str):
            raw = raw.encode()
    elif isinstance(source, str):
        raw = source.encode()
    else:
        raise PanelError(f"unsupported source type {type(source).__name__}")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        text = raw.decode("latin-1")
    return text.splitlines()


def _tokenize(line: str, delimiter: str | None) -> list[str]:
    if delimiter is not None:
        return [tok.strip() for tok in line.split(delimiter)]
    if "," in line:
        return [tok.strip() for tok in line.split(",")]
    return line.split()


def _parse_date(token: str, row: int) -> dt.date:
    token = token.strip().strip('"')
    try:
        if token.isdigit() and len(token) == 8:
            return dt.date(int(token[:4]), int(token[4:6]), int(token[6:8]))
        if token.isdigit() and len(token) == 6:
            year, month = int(token[:4]), int(token[4:6])
            # stamp months by their last calendar day (end-of-period data)
            nxt = dt.date(year + month // 12, month % 12 + 1, 1)
            return nxt - dt.timedelta(days=1)
        return dt.date.fromisoformat(token)
    except ValueError:
        raise PanelError(f"unparseable date {token!r} in row {row}") from None


def load_returns(source, schema: LoadSchema = LoadSchema()) -> ReturnPanel:
    """Parse a delimited return file into a :class:`ReturnPanel`.

    Rows containing a sentinel value are dropped and counted in
    ``dropped_rows``.  Percent inputs are converted to decimal.
    """
    lines = _decode(source)[schema.skip_rows :]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise PanelError("empty input")

    header: list[str] | None = None
    if schema.has_header:
        header = _tokenize(lines[0], schema.delimiter)
        lines = lines[1:]

    probe = _tokenize(lines[0], schema.delimiter)
    ncols = len(probe)

    def _col_index(spec, what: str) -> int:
        if isinstance(spec, int):
            return spec
        if header is None:
            raise PanelError(f"named {what} column {spec!r} requires a header row")
        try:
            return header.index(spec)
        except ValueError:
            raise PanelError(f"{what} column {spec!r} not in header") from None

    date_idx = _col_index(schema.date_column, "date")
    if schema.asset_columns is None:
        asset_idx = [i for i in range(ncols) if i != date_idx]
    else:
        asset_idx = [_col_index(c, "asset") for c in schema.asset_columns]
    if len(asset_idx) < 2:
        raise PanelError(f"fewer than 2 asset columns ({len(asset_idx)})")

    if header is not None:
        labels = [header[i] if i < len(header) else f"col{i}" for i in asset_idx]
    else:
        labels = [f"col{i}" for i in asset_idx]

    dates: list[dt.date] = []
    rows: list[list[float]] = []
    dropped = 0
    for r, line in enumerate(lines, start=1):
        toks = _tokenize(line, schema.delimiter)
        if len(toks) <= max(asset_idx + [date_idx]):
            raise PanelError(f"row {r} has {len(toks)} fields, expected {ncols}")
        date = _parse_date(toks[date_idx], r)
        vals = []
        for i in asset_idx:
            try:
                vals.append(float(toks[i]))
            except ValueError:
                raise PanelError(
                    f"non-numeric cell {toks[i]!r} in row {r}, column {labels[asset_idx.index(i)]!r}"
                ) from None
        if any(v in schema.sentinels for v in vals):
            dropped += 1
            continue
        dates.append(date)
        rows.append(vals)

    if not rows:
        raise PanelError("no data rows survived ingestion")
    ret = np.array(rows, dtype=float)
    if schema.percent:
        ret = ret / 100.0
    return ReturnPanel(
        dates=tuple(dates),
        assets=tuple(labels),
        returns=ret,
        frequency=schema.frequency,
        dropped_rows=dropped,
    )


def load_french_library(source, block: int = 0) -> ReturnPanel:
    """Load a Kenneth French library text/CSV file.

    These files carry prose headers and several data sections separated by
    blank lines; ``block`` selects the section (0 = the first, which is the
    value-weighted return block in the library's standard layout).
    """
    lines = _decode(source)

    def _is_data(line: str) -> bool:
        tok = _tokenize(line, None)
        return bool(tok) and tok[0].isdigit() and len(tok[0]) in (6, 8)

    blocks: list[tuple[int, int]] = []
    start = None
    for i, line in enumerate(lines):
        if _is_data(line):
            if start is None:
                start = i
        else:
            if start is not None:
                blocks.append((start, i))
                start = None
    if start is not None:
        blocks.append((start, len(lines)))
    if block >= len(blocks):
        raise PanelError(f"requested block {block} but found {len(blocks)} data sections")
    lo, hi = blocks[block]

    header_line = None
    for j in range(lo - 1, -1, -1):
        if lines[j].strip():
            header_line = lines[j]
            break
    if header_line is None:
        raise PanelError("no header line above the data block")
    names = [n for n in _tokenize(header_line, None) if n]

    sample = _tokenize(lines[lo], None)
    freq = "daily" if len(sample[0]) == 8 else "monthly"
    schema = LoadSchema(
        date_column=0,
        asset_columns=None,
        percent=True,
        delimiter=None,
        has_header=False,
        frequency=freq,
    )
    panel = load_returns("\n".join(lines[lo:hi]).encode(), schema)
    if len(names) == panel.n_assets + 1:
        names = names[1:]
    if len(names) == panel.n_assets:
        panel = replace(panel, assets=tuple(names))
    return panel


def period_key(date: dt.date, frequency: str):
    """Calendar bucket of a trading day: ISO week or calendar month."""
    if frequency == "weekly":
        iso = date.isocalendar()
        return (iso[0], iso[1])
    if frequency == "monthly":
        return (date.year, date.month)
    raise ValueError(f"no period rule for frequency {frequency!r}")


def scale_frequency(panel: ReturnPanel, target: str, method: str = "geometric") -> ReturnPanel:
    """Aggregate a daily panel to weekly or monthly periods.

    ``geometric`` compounds the period's days and takes the per-day
    geometric mean, prod(1+r_j)^(1/ND) - 1; ``compound`` returns the plain
    compounded period return prod(1+r_j) - 1.  Each period is stamped by
    its last trading day.
    """
    if panel.frequency != "daily":
        raise PanelError(f"can only scale daily panels, got {panel.frequency}")
    if target not in ("weekly", "monthly"):
        raise PanelError(f"cannot scale to {target!r}")
    if method not in ("geometric", "compound"):
        raise ValueError(f"unknown scaling method {method!r}")

    groups: list[tuple[object, list[int]]] = []
    for i, date in enumerate(panel.dates):
        key = period_key(date, target)
        if groups and groups[-1][0] == key:
            groups[-1][1].append(i)
        else:
            groups.append((key, [i]))

    dates: list[dt.date] = []
    out = np.empty((len(groups), panel.n_assets))
    kept = 0
    for key, idx in groups:
        if not idx:
            warnings.warn(f"empty period group {key}, skipped", stacklevel=2)
            continue
        log1p = np.log1p(panel.returns[idx])
        if method == "geometric":
            out[kept] = np.expm1(log1p.mean(axis=0))
        else:
            out[kept] = np.expm1(log1p.sum(axis=0))
        dates.append(panel.dates[idx[-1]])
        kept += 1
    return ReturnPanel(
        dates=tuple(dates),
        assets=panel.assets,
        returns=out[:kept],
        frequency=target,
        dropped_rows=panel.dropped_rows,
    )


def rolling_windows(
    panel: ReturnPanel,
    m: int,
    daily: ReturnPanel | None = None,
    trailing_periods: int = 5,
) -> Iterator[WindowSlice]:
    """Yield the P - M one-step-ahead estimation slices of a panel.

    Target indices run M .. P-1 and each window holds the M immediately
    preceding rows.  When a daily companion panel is supplied, its rows are
    bucketed by the panel's period rule and attached to each slice: the
    groups of the last ``trailing_periods`` window rows plus the target
    period's own days.
    """
    p = panel.n_periods
    if m < 1:
        raise PanelError("window length must be positive")
    if p <= m:
        raise PanelError(f"insufficient history: {p} periods for window {m}")

    day_groups: dict[object, np.ndarray] | None = None
    if daily is not None:
        if daily.frequency != "daily":
            raise PanelError("companion panel must be daily")
        buckets: dict[object, list[int]] = {}
        for i, date in enumerate(daily.dates):
            buckets.setdefault(period_key(date, panel.frequency), []).append(i)
        day_groups = {k: daily.returns[idx] for k, idx in buckets.items()}
        for t in range(max(0, m - trailing_periods), p):
            if period_key(panel.dates[t], panel.frequency) not in day_groups:
                raise PanelError(
                    f"daily companion does not cover period ending {panel.dates[t]}"
                )

    for t in range(m, p):
        trailing = None
        target_days = None
        if day_groups is not None:
            lo = max(0, t - trailing_periods)
            trailing = tuple(
                day_groups[period_key(panel.dates[i], panel.frequency)]
                for i in range(lo, t)
            )
            target_days = day_groups[period_key(panel.dates[t], panel.frequency)]
        yield WindowSlice(
            window=panel.returns[t - m : t],
            target_index=t,
            trailing_daily=trailing,
            daily_target=target_days,
        )


def to_canonical_csv(panel: ReturnPanel) -> str:
    """Serialize a panel to the canonical interchange CSV (decimal, ISO dates)."""
    lines = [f"# frequency={panel.frequency}"]
    lines.append(",".join(["date"] + list(panel.assets)))
    for date, row in zip(panel.dates, panel.returns):
        lines.append(",".join([date.isoformat()] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def from_canonical_csv(source) -> ReturnPanel:
    """Load a panel previously written by :func:`to_canonical_csv`."""
    lines = _decode(source)
    if not lines or not lines[0].startswith("# frequency="):
        raise PanelError("not a canonical panel CSV (missing frequency header)")
    freq = lines[0].split("=", 1)[1].strip()
    schema = LoadSchema(
        date_column=0,
        percent=False,
        sentinels=(),
        delimiter=",",
        has_header=True,
        frequency=freq,
    )
    return load_returns("\n".join(lines[1:]).encode(), schema)


def write_canonical_csv(panel: ReturnPanel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_canonical_csv(panel))
