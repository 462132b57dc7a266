"""Configuration-driven entry point: run backtests, render report tables.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
error.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import datetime as dt
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import panel as panel_mod
from .backtest import BacktestConfig, BacktestError, run_backtest, write_result_csvs
from .estimators import MODEL_IDS, ModelConfig
from .panel import LoadSchema, PanelError, ReturnPanel
from .report import CRITERIA, emit_pct_diff, render_table
from .stats import MetricReport, StatsError, compare_with_benchmark

DEFAULT_STRATEGIES = ("MVP", "CON_MVP", "VT", "TP")


class ConfigError(ValueError):
    """The run configuration cannot be used."""


@dataclasses.dataclass(frozen=True)
class DatasetSpec:
    name: str
    path: Path
    layout: str = "french"
    weighting: str = "value"
    frequency: str | None = None
    percent: bool = True
    date_column: int = 0
    has_header: bool = True
    sentinels: tuple[float, ...] = panel_mod.DEFAULT_SENTINELS


@dataclasses.dataclass(frozen=True)
class RunConfig:
    frequency: str
    window: int
    kappa: float
    seed: int
    models: tuple[str, ...]
    strategies: tuple[str, ...]
    output: Path
    formats: tuple[str, ...]
    jobs: int
    scale: str
    datasets: tuple[DatasetSpec, ...]


def _split_list(raw: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in raw.split(",") if tok.strip())


def parse_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "run" not in parser:
        raise ConfigError("config needs a [run] section")
    run = parser["run"]
    try:
        frequency = run.get("frequency", "weekly")
        if frequency not in panel_mod.FREQUENCIES:
            raise ConfigError(f"unknown frequency {frequency!r}")
        models_raw = run.get("models", "COV")
        models = MODEL_IDS if models_raw.strip().upper() == "ALL" else _split_list(models_raw)
        strategies_raw = run.get("strategies", "MVP, CON_MVP, VT, TP")
        strategies = (
            DEFAULT_STRATEGIES
            if strategies_raw.strip().upper() == "ALL"
            else _split_list(strategies_raw)
        )
        config = RunConfig(
            frequency=frequency,
            window=run.getint("window", 520),
            kappa=run.getfloat("kappa", 0.005),
            seed=run.getint("seed", 0),
            models=tuple(m.upper() for m in models),
            strategies=tuple(s.upper() for s in strategies),
            output=Path(run.get("output", "out")),
            formats=_split_list(run.get("formats", "csv")),
            jobs=run.getint("jobs", 1),
            scale=run.get("scale", "geometric"),
            datasets=(),
        )
    except ValueError as err:
        raise ConfigError(f"bad [run] value: {err}") from None

    datasets = []
    for section in parser.sections():
        if not section.startswith("dataset."):
            continue
        sec = parser[section]
        if "path" not in sec:
            raise ConfigError(f"[{section}] needs a path")
        try:
            sentinels = sec.get("sentinels", None)
            datasets.append(
                DatasetSpec(
                    name=section.split(".", 1)[1],
                    path=Path(sec["path"]),
                    layout=sec.get("layout", "french"),
                    weighting=sec.get("weighting", "value"),
                    frequency=sec.get("frequency", None),
                    percent=sec.getboolean("percent", True),
                    date_column=sec.getint("date_column", 0),
                    has_header=sec.getboolean("has_header", True),
                    sentinels=(
                        tuple(float(s) for s in _split_list(sentinels))
                        if sentinels
                        else panel_mod.DEFAULT_SENTINELS
                    ),
                )
            )
        except ValueError as err:
            raise ConfigError(f"bad value in [{section}]: {err}") from None
    if not datasets:
        raise ConfigError("config names no [dataset.*] sections")
    if not config.models or not config.strategies:
        raise ConfigError("need at least one model and one strategy")
    if config.scale not in ("geometric", "compound"):
        raise ConfigError(f"unknown scale method {config.scale!r}")
    for mid in config.models:
        if mid not in MODEL_IDS:
            raise ConfigError(f"unknown model {mid!r}")
    return dataclasses.replace(config, datasets=tuple(datasets))


def _load_dataset(spec: DatasetSpec) -> ReturnPanel:
    if not spec.path.exists():
        raise PanelError(f"dataset file does not exist: {spec.path}")
    if spec.layout == "french":
        return panel_mod.load_french_library(spec.path)
    if spec.layout == "canonical":
        return panel_mod.from_canonical_csv(spec.path)
    if spec.layout == "csv":
        schema = LoadSchema(
            date_column=spec.date_column,
            percent=spec.percent,
            sentinels=spec.sentinels,
            delimiter=",",
            has_header=spec.has_header,
            frequency=spec.frequency or "daily",
        )
        return panel_mod.load_returns(spec.path, schema)
    raise ConfigError(f"unknown layout {spec.layout!r}")


def _prepare_panels(
    spec: DatasetSpec, config: RunConfig
) -> tuple[ReturnPanel, ReturnPanel | None]:
    raw = _load_dataset(spec)
    needs_daily = bool({"RCOV", "CP"} & set(config.models))
    if raw.frequency == config.frequency:
        if needs_daily:
            raise ConfigError(
                f"models {sorted({'RCOV', 'CP'} & set(config.models))} need daily "
                f"source data; dataset {spec.name!r} is {raw.frequency}"
            )
        return raw, None
    if raw.frequency != "daily":
        raise ConfigError(
            f"dataset {spec.name!r} is {raw.frequency}; cannot produce "
            f"{config.frequency} periods"
        )
    scaled = panel_mod.scale_frequency(raw, config.frequency, config.scale)
    return scaled, raw


def _report_to_dict(report: MetricReport) -> dict:
    return dataclasses.asdict(report)


def _report_from_dict(data: dict) -> MetricReport:
    return MetricReport(**data)


def run(config_path, seed=None, jobs=None, formats=None) -> int:
    """Execute ingest -> backtest -> stats -> report for one config file."""
    try:
        config = parse_config(config_path)
        if seed is not None:
            config = dataclasses.replace(config, seed=int(seed))
        if jobs is not None:
            config = dataclasses.replace(config, jobs=int(jobs))
        if formats is not None:
            config = dataclasses.replace(config, formats=tuple(formats))
    except (ConfigError, configparser.Error) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    outdir = config.output
    outdir.mkdir(parents=True, exist_ok=True)
    all_reports: dict[tuple[str, str, str], MetricReport] = {}
    manifest: dict = {
        "version": 1,
        "created": dt.datetime.now(dt.timezone.utc).isoformat(),
        "config": {
            "frequency": config.frequency,
            "window": config.window,
            "kappa": config.kappa,
            "seed": config.seed,
            "models": list(config.models),
            "strategies": list(config.strategies),
            "scale": config.scale,
        },
        "datasets": {},
        "files": {},
    }

    try:
        for spec in config.datasets:
            target_panel, daily_panel = _prepare_panels(spec, config)
            bt_config = BacktestConfig(
                window=config.window,
                kappa=config.kappa,
                master_seed=config.seed,
                models=config.models,
                strategies=config.strategies,
                jobs=config.jobs,
            )
            result = run_backtest(target_panel, bt_config, daily=daily_panel)

            asset_returns = target_panel.returns[
                [target_panel.dates.index(d) for d in result.dates]
            ]
            reports = {}
            for (mid, sid), path_obj in result.paths.items():
                rep = compare_with_benchmark(
                    mid,
                    sid,
                    path_obj.gross,
                    path_obj.net,
                    result.naive.gross,
                    result.naive.net,
                    weights=path_obj.weights,
                    bench_weights=result.naive.weights,
                    asset_returns=asset_returns,
                )
                reports[(spec.name, mid, sid)] = rep
            all_reports.update(reports)

            ds_dir = outdir / spec.name
            hashes = write_result_csvs(result, ds_dir)
            metrics = {
                "dataset": spec.name,
                "weighting": spec.weighting,
                "frequency": config.frequency,
                "window": config.window,
                "n_out_of_sample": len(result.dates),
                "dropped_rows": target_panel.dropped_rows,
                "reports": [
                    dict(_report_to_dict(rep), dataset=ds)
                    for (ds, _, _), rep in sorted(reports.items())
                ],
            }
            metrics_name = f"{spec.name}_metrics.json"
            metrics_text = json.dumps(metrics, indent=2, sort_keys=True)
            (outdir / metrics_name).write_text(metrics_text, encoding="utf-8")
            manifest["datasets"][spec.name] = {
                "metrics": metrics_name,
                "paths_dir": spec.name,
                "fallbacks": [list(entry) for entry in result.fallback_log],
            }
            manifest["files"].update(
                {f"{spec.name}/{name}": digest for name, digest in hashes.items()}
            )
            manifest["files"][metrics_name] = hashlib.sha256(
                metrics_text.encode()
            ).hexdigest()

        ext = {"csv": "csv", "markdown": "md", "json": "json"}
        for criterion in CRITERIA:
            for fmt in config.formats:
                if fmt == "json":
                    rows = [
                        dict(_report_to_dict(rep), dataset=ds)
                        for (ds, _, _), rep in sorted(all_reports.items())
                    ]
                    text = json.dumps(rows, indent=2, sort_keys=True)
                else:
                    text = render_table(all_reports, criterion, fmt=fmt)
                name = f"table_{criterion}.{ext.get(fmt, fmt)}"
                (outdir / name).write_text(text, encoding="utf-8")
                manifest["files"][name] = hashlib.sha256(text.encode()).hexdigest()

        pct = emit_pct_diff(all_reports)
        (outdir / "pct_diff.csv").write_text(pct, encoding="utf-8")
        manifest["files"]["pct_diff.csv"] = hashlib.sha256(pct.encode()).hexdigest()
        (outdir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
        )
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (PanelError, StatsError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except (BacktestError, ValueError, RuntimeError, np.linalg.LinAlgError) as err:
        print(f"internal error: {err}", file=sys.stderr)
        return 4
    return 0


def render(manifest_path, criterion: str, fmt: str = "text") -> int:
    try:
        manifest_path = Path(manifest_path)
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        reports: dict[tuple[str, str, str], MetricReport] = {}
        for name, entry in manifest["datasets"].items():
            metrics = json.loads(
                (manifest_path.parent / entry["metrics"]).read_text(encoding="utf-8")
            )
            for row in metrics["reports"]:
                row = dict(row)
                ds = row.pop("dataset")
                rep = _report_from_dict(row)
                reports[(ds, rep.model_id, rep.strategy_id)] = rep
    except (OSError, KeyError, json.JSONDecodeError) as err:
        print(f"data error: cannot load manifest: {err}", file=sys.stderr)
        return 3
    try:
        sys.stdout.write(render_table(reports, criterion, fmt=fmt))
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="volbench",
        description="Covariance-model portfolio backtesting against 1/N",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a config file end to end")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=None)
    p_run.add_argument("--format", dest="formats", action="append", default=None)

    p_render = sub.add_parser("render", help="re-render tables from a manifest")
    p_render.add_argument("manifest")
    p_render.add_argument(
        "--criterion", choices=CRITERIA, default="sharpe", required=False
    )
    p_render.add_argument(
        "--format", choices=("text", "csv", "markdown"), default="text"
    )

    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, seed=args.seed, jobs=args.jobs, formats=args.formats)
    return render(args.manifest, args.criterion, fmt=args.format)


if __name__ == "__main__":
    sys.exit(main())
