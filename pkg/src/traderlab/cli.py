"""Command-line entry point.

Commands:

* ``traderlab run --config cfg.toml``         one backtest, results + report
* ``traderlab evaluate results.csv [--json]`` report from a results CSV
* ``traderlab experiment --config cfg.toml``  mono-asset strategy grid plus
  the hr/apm1 allocators on the full universe, with a summary table

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .backtest import BacktestSetup, EquityRecord, FillPolicy, run, write_results_csv
from .errors import ConfigError, DataError, TraderLabError
from .evaluate import PERIODS_PER_YEAR, PerformanceReport, evaluate, evaluate_file, write_report_json
from .ips import PolicyStatement
from .market_data import BarSeries, Period, load_bar_csv
from .orders import CostModel
from .strategies import (
    AnalystEnsembleTrader,
    MaxSharpeTrader,
    MovingAverageTrader,
    RandomForestTrader,
    RandomTrader,
    RsiTrader,
    Trader,
)

STRATEGY_NAMES = ("random", "rsi", "ma", "rfor", "hr", "apm1")


@dataclass
class RunConfig:
    data_dir: Path
    assets: list[str]
    prestart: str
    start: str
    end: str
    period: Period = Period.DAILY
    capital: float = 100_000.0
    mem: int = 10
    seed: int = 0
    strategy: str = "random"
    strategy_params: dict = field(default_factory=dict)
    fill_policy: FillPolicy = FillPolicy.DECISION_CLOSE
    cost_model: CostModel = field(default_factory=CostModel)
    lots: dict[str, int] = field(default_factory=dict)
    policy: PolicyStatement | None = None
    risk_free: float = 0.0
    results_file: Path | None = None
    report_file: Path | None = None
    verbose: bool = False
    experiment_strategies: list[str] = field(default_factory=lambda: ["rsi", "ma", "rfor"])
    experiment_out_dir: Path | None = None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: Mapping, base_dir: Path = Path(".")) -> RunConfig:
    try:
        assets = list(raw["assets"])
        cfg = RunConfig(
            data_dir=base_dir / raw.get("data_dir", "data"),
            assets=assets,
            prestart=raw["prestart"],
            start=raw["start"],
            end=raw["end"],
        )
    except KeyError as exc:
        raise ConfigError(f"missing required config key: {exc.args[0]}") from None
    if not assets:
        raise ConfigError("assets list is empty")
    try:
        cfg.period = Period(raw.get("period", "daily"))
    except ValueError:
        raise ConfigError(f"unknown period {raw.get('period')!r}") from None
    cfg.capital = float(raw.get("capital", cfg.capital))
    cfg.mem = int(raw.get("mem", cfg.mem))
    cfg.seed = int(raw.get("seed", cfg.seed))
    cfg.risk_free = float(raw.get("risk_free", 0.0))
    cfg.verbose = bool(raw.get("verbose", False))
    cfg.strategy = str(raw.get("strategy", "random"))
    if cfg.strategy not in STRATEGY_NAMES:
        raise ConfigError(f"unknown strategy {cfg.strategy!r}; "
                          f"expected one of {', '.join(STRATEGY_NAMES)}")
    try:
        cfg.fill_policy = FillPolicy(raw.get("fill_policy", "decision_close"))
    except ValueError:
        raise ConfigError(f"unknown fill_policy {raw.get('fill_policy')!r}") from None
    costs = raw.get("costs", {})
    cfg.cost_model = CostModel(float(costs.get("fixed", 0.0)),
                               float(costs.get("proportional", 0.0)))
    cfg.lots = {a: int(v) for a, v in dict(raw.get("lots", {})).items()}
    cfg.strategy_params = dict(raw.get("strategy_params", {}))
    if "policy" in raw:
        try:
            cfg.policy = PolicyStatement.from_dict(raw["policy"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad policy section: {exc}") from None
    if "results_file" in raw:
        cfg.results_file = base_dir / raw["results_file"]
    if "report_file" in raw:
        cfg.report_file = base_dir / raw["report_file"]
    exp = raw.get("experiment", {})
    if "strategies" in exp:
        cfg.experiment_strategies = list(exp["strategies"])
        for name in cfg.experiment_strategies:
            if name not in STRATEGY_NAMES:
                raise ConfigError(f"unknown experiment strategy {name!r}")
    if "out_dir" in exp:
        cfg.experiment_out_dir = base_dir / exp["out_dir"]
    return cfg


def build_trader(name: str, assets: list[str], cfg: RunConfig) -> Trader:
    p = cfg.strategy_params
    lots = cfg.lots
    if name == "random":
        return RandomTrader(assets, seed=cfg.seed, lots=lots)
    if name == "rsi":
        return RsiTrader(assets, lots=lots, threshold=float(p.get("threshold", 70.0)))
    if name == "ma":
        return MovingAverageTrader(assets, lots=lots, period=int(p.get("period", 10)))
    if name == "rfor":
        return RandomForestTrader(
            assets, lots=lots,
            time_frame=int(p.get("time_frame", 10)),
            horizon=int(p.get("horizon", 1)),
            n_bins=int(p.get("n_bins", 3)),
            n_estimators=int(p.get("n_estimators", 10)),
            seed=cfg.seed)
    if name == "hr":
        return MaxSharpeTrader(assets, lots=lots, risk_free=cfg.risk_free)
    if name == "apm1":
        return AnalystEnsembleTrader(
            assets, lots=lots, risk_free=cfg.risk_free,
            alpha=float(p.get("alpha", 0.5)),
            ma_period=int(p.get("period", 10)),
            time_frame=int(p.get("time_frame", 10)),
            horizon=int(p.get("horizon", 1)),
            n_bins=int(p.get("n_bins", 3)),
            n_estimators=int(p.get("n_estimators", 10)),
            seed=cfg.seed)
    raise ConfigError(f"unknown strategy {name!r}")


def load_data(cfg: RunConfig, assets: list[str]) -> dict[str, BarSeries]:
    data: dict[str, BarSeries] = {}
    for asset in assets:
        path = cfg.data_dir / f"{asset}.csv"
        if not path.exists():
            raise DataError(f"missing bar file: {path}")
        data[asset] = load_bar_csv(path, asset, cfg.period)
    return data


def make_setup(cfg: RunConfig, assets: list[str],
               results_file: Path | None) -> BacktestSetup:
    return BacktestSetup(
        assets=assets, prestart=cfg.prestart, start=cfg.start, end=cfg.end,
        period=cfg.period, capital=cfg.capital, mem=cfg.mem,
        results_file=results_file, verbose=cfg.verbose, seed=cfg.seed,
        fill_policy=cfg.fill_policy, cost_model=cfg.cost_model,
        policy=cfg.policy)


def write_equity_svg(records: list[EquityRecord], path: str | Path,
                     width: int = 720, height: int = 360) -> None:
    """Minimal deterministic SVG equity curve (polyline plus labels)."""
    eq = [r.equity for r in records]
    lo, hi = min(eq), max(eq)
    span = hi - lo or 1.0
    margin = 40
    pw, ph = width - 2 * margin, height - 2 * margin
    n = len(eq)
    points = " ".join(
        f"{margin + pw * i / max(n - 1, 1):.2f},{margin + ph * (1 - (v - lo) / span):.2f}"
        for i, v in enumerate(eq))
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<polyline points="{points}" fill="none" stroke="steelblue" stroke-width="1.5"/>\n'
        f'<text x="{margin}" y="{margin - 10}" font-size="12">equity '
        f'{records[0].timestamp} .. {records[-1].timestamp}</text>\n'
        f'<text x="{margin}" y="{margin + 12}" font-size="11">{hi:.2f}</text>\n'
        f'<text x="{margin}" y="{height - margin - 4}" font-size="11">{lo:.2f}</text>\n'
        "</svg>\n")
    Path(path).write_text(svg)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.verbose:
        cfg.verbose = True
    data = load_data(cfg, cfg.assets)
    trader = build_trader(cfg.strategy, cfg.assets, cfg)
    setup = make_setup(cfg, cfg.assets, cfg.results_file)
    records = run(trader, setup, data)
    report = evaluate(records, cfg.risk_free, PERIODS_PER_YEAR[cfg.period])
    if cfg.report_file is not None:
        write_report_json(report, cfg.report_file)
    if args.plot is not None:
        write_equity_svg(records, args.plot)
    print(report.to_text())
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    periods = PERIODS_PER_YEAR[Period(args.period)]
    report = evaluate_file(args.results, args.risk_free, periods)
    if args.json:
        import json

        print(json.dumps(report.to_json_dict(), indent=2))
    else:
        print(report.to_text())
    return 0


def _format_summary(per_asset: dict[str, dict[str, PerformanceReport]],
                    portfolio: dict[str, PerformanceReport],
                    strategies: list[str]) -> str:
    def table(title: str, columns: list[str],
              reports: Mapping[str, PerformanceReport]) -> str:
        rows = [("An. Return (%)", lambda r: f"{r.ann_return_pct:.2f}"),
                ("An. Sharpe Ratio (%)",
                 lambda r: "undef" if r.ann_sharpe_pct is None else f"{r.ann_sharpe_pct:.2f}"),
                ("Volatility (%)", lambda r: f"{r.daily_vol_pct:.3f}")]
        head = f"{title}\n" + f"{'Value - Strategy':<22}" + "".join(f"{c:>12}" for c in columns)
        lines = [head]
        for label, fmt in rows:
            lines.append(f"{label:<22}" + "".join(f"{fmt(reports[c]):>12}" for c in columns))
        return "\n".join(lines)

    blocks = [table(f"Asset {asset}", strategies, by_strategy)
              for asset, by_strategy in per_asset.items()]
    blocks.append(table("Portfolio (all assets)", list(portfolio), portfolio))
    return "\n\n".join(blocks) + "\n"


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out_dir = cfg.experiment_out_dir
    if out_dir is None:
        raise ConfigError("experiment requires [experiment].out_dir")
    data = load_data(cfg, cfg.assets)  # fail fast before any scenario runs
    periods = PERIODS_PER_YEAR[cfg.period]

    scenario_records: dict[str, list[EquityRecord]] = {}
    per_asset: dict[str, dict[str, PerformanceReport]] = {}
    for asset in cfg.assets:
        per_asset[asset] = {}
        for name in cfg.experiment_strategies:
            trader = build_trader(name, [asset], cfg)
            setup = make_setup(cfg, [asset], None)
            records = run(trader, setup, {asset: data[asset]})
            scenario_records[f"{name}_{asset}"] = records
            per_asset[asset][name] = evaluate(records, cfg.risk_free, periods)
    portfolio: dict[str, PerformanceReport] = {}
    for name in ("hr", "apm1"):
        trader = build_trader(name, cfg.assets, cfg)
        setup = make_setup(cfg, cfg.assets, None)
        records = run(trader, setup, data)
        scenario_records[name] = records
        portfolio[name.upper()] = evaluate(records, cfg.risk_free, periods)

    # all scenarios succeeded: only now touch the filesystem
    out_dir.mkdir(parents=True, exist_ok=True)
    for key, records in scenario_records.items():
        write_results_csv(records, out_dir / f"{key}.csv", cfg.period)
    summary = _format_summary(per_asset, portfolio, cfg.experiment_strategies)
    (out_dir / "summary.txt").write_text(summary)
    print(summary, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="traderlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one backtest from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--verbose", action="store_true")
    p_run.add_argument("--plot", default=None, metavar="SVG",
                       help="also write an SVG equity curve")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("evaluate", help="report metrics for a results CSV")
    p_eval.add_argument("results")
    p_eval.add_argument("--json", action="store_true")
    p_eval.add_argument("--risk-free", type=float, default=0.0)
    p_eval.add_argument("--period", default="daily", choices=[p.value for p in Period])
    p_eval.set_defaults(func=cmd_evaluate)

    p_exp = sub.add_parser("experiment",
                           help="strategy/asset grid plus hr and apm1, with summary")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except TraderLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
