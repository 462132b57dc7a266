"""Table rendering with significance marks and figure-data emission."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

from .stats import MetricReport

CRITERIA = ("sharpe", "sharpe_net", "vol")

_FIELDS = {
    "sharpe": ("sharpe", "p_sharpe", "sharpe_better", "naive_sharpe"),
    "sharpe_net": ("sharpe_net", "p_sharpe_net", "sharpe_net_better", "naive_sharpe_net"),
    "vol": ("volatility", "p_vol_bf", "vol_better", "naive_volatility"),
}


def _stars(p: float | None) -> str:
    if p is None:
        return ""
    if p <= 0.01:
        return "***"
    if p <= 0.05:
        return "**"
    if p <= 0.10:
        return "*"
    return ""


def format_cell(value: float, p: float | None, better: bool | None) -> str:
    """3-decimal value, stars when better, parenthesized stars when worse."""
    text = f"{value:.3f}"
    marks = _stars(p)
    if not marks or better is None:
        return text
    if better:
        return text + marks
    return f"({text}{marks})"


def cell_score(p: float | None, better: bool | None) -> Fraction:
    """Outperformance score of one cell (the consistency heuristic)."""
    if p is None or better is None or p > 0.10:
        return Fraction(0)
    if not better:
        return Fraction(-1)
    if p <= 0.05:
        return Fraction(1)
    return Fraction(2, 3)


def consistency_score(cells: Iterable[tuple[float | None, bool | None]]) -> Fraction:
    """Sum of cell scores across datasets for one model row."""
    return sum((cell_score(p, better) for p, better in cells), Fraction(0))


def _criterion_fields(report: MetricReport, criterion: str):
    value_f, p_f, better_f, naive_f = _FIELDS[criterion]
    return (
        getattr(report, value_f),
        getattr(report, p_f),
        getattr(report, better_f),
        report.extra.get(naive_f),
    )


def render_table(
    reports: Mapping[tuple[str, str, str], MetricReport],
    criterion: str,
    fmt: str = "text",
) -> str:
    """One table per criterion: naive row first, then per-strategy blocks
    with model rows ordered by consistency score (descending, ties broken
    lexicographically)."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    datasets = sorted({k[0] for k in reports})
    strategies = sorted({k[2] for k in reports})
    models = sorted({k[1] for k in reports})

    naive_row: list[str] = []
    for ds in datasets:
        keys = sorted(k for k in reports if k[0] == ds)
        value = _criterion_fields(reports[keys[0]], criterion)[3] if keys else None
        naive_row.append("" if value is None else f"{value:.3f}")

    blocks: list[tuple[str, list[tuple[str, list[str]]]]] = []
    for sid in strategies:
        rows = []
        for mid in models:
            cells = []
            marks = []
            have = False
            for ds in datasets:
                rep = reports.get((ds, mid, sid))
                if rep is None:
                    marks.append("")
                    cells.append((None, None))
                    continue
                have = True
                value, p, better, _ = _criterion_fields(rep, criterion)
                marks.append(format_cell(value, p, better))
                cells.append((p, better))
            if have:
                rows.append((consistency_score(cells), mid, marks))
        rows.sort(key=lambda r: (-r[0], r[1]))
        blocks.append((sid, [(mid, marks) for _, mid, marks in rows]))

    header = [""] + datasets
    table_rows: list[list[str]] = [["Naive"] + naive_row]
    for sid, rows in blocks:
        table_rows.append([sid] + [""] * len(datasets))
        for mid, marks in rows:
            table_rows.append([mid] + marks)

    if fmt == "csv":
        return "\n".join(",".join(row) for row in [header] + table_rows) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |"]
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        for row in table_rows:
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines) + "\n"
    widths = [
        max(len(row[i]) for row in [header] + table_rows) for i in range(len(header))
    ]
    lines = []
    for row in [header] + table_rows:
        lines.append(
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        )
    return "\n".join(lines) + "\n"


def emit_pct_diff(reports: Mapping[tuple[str, str, str], MetricReport]) -> str:
    """Percentage difference of Sharpe and volatility versus naive, as CSV.

    Emits one row per (dataset, model, strategy, metric) plus per-strategy
    averages across datasets and models, and the grand cross-strategy
    average of each metric.
    """
    lines = ["dataset,model,strategy,metric,pct_diff"]
    by_strategy: dict[tuple[str, str], list[float]] = {}
    for (ds, mid, sid), rep in sorted(reports.items()):
        for metric, (value_f, _, _, naive_f) in (
            ("sharpe", _FIELDS["sharpe"]),
            ("volatility", _FIELDS["vol"]),
        ):
            value = getattr(rep, value_f)
            base = rep.extra.get(naive_f)
            if base is None or base == 0:
                lines.append(f"{ds},{mid},{sid},{metric},undefined")
                continue
            pct = 100.0 * (value - base) / abs(base)
            lines.append(f"{ds},{mid},{sid},{metric},{pct!r}")
            by_strategy.setdefault((sid, metric), []).append(pct)

    grand: dict[str, list[float]] = {}
    for (sid, metric), vals in sorted(by_strategy.items()):
        avg = sum(vals) / len(vals)
        lines.append(f"ALL,ALL,{sid},{metric},{avg!r}")
        grand.setdefault(metric, []).append(avg)
    for metric, vals in sorted(grand.items()):
        avg = sum(vals) / len(vals)
        lines.append(f"ALL,ALL,ALL,{metric},{avg!r}")
    return "\n".join(lines) + "\n"
