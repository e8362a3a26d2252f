"""
Command line surface tying the library into reproducible batch workflows.

Subcommands: backtest, sweep, span, simulate, verify, resample. One JSON
config (or equivalent flags) in, deterministic CSV/JSON out: rerunning a
command with the same config and seed produces byte-identical files. Every
output embeds the config hash and seed, as leading ``#`` comment lines in
CSV and as top-level keys in JSON.

Exit codes: 0 success, 1 verification-check failure, 2 config or parameter
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analytics, model, momentum, panel, riskpipe

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(Exception):
    """Invalid or incomplete run configuration."""


def _config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _header(command: str, cfg_hash: str, seed) -> dict:
    return {
        "command": command,
        "config_hash": cfg_hash,
        "seed": "none" if seed is None else seed,
    }


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, indent=2))
        fh.write("\n")


def _load_config(path) -> dict:
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return cfg


def _require_path(cfg: dict, key: str) -> str:
    if key not in cfg or cfg[key] in (None, ""):
        raise ConfigError(f"config is missing required path {key!r}")
    p = str(cfg[key])
    if not Path(p).exists():
        raise ConfigError(f"{key} path does not exist: {p}")
    return p


def _parse_range(value) -> tuple[int, ...]:
    """Accept 4, "4", "1..12", "1,2,3" or a JSON list."""
    if isinstance(value, (list, tuple)):
        return tuple(int(x) for x in value)
    text = str(value).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    if "," in text:
        return tuple(int(p) for p in text.split(","))
    return (int(text),)


def _pipeline_config(cfg: dict) -> riskpipe.PipelineConfig:
    return riskpipe.PipelineConfig(
        window_months=int(cfg.get("window_months", 36)),
        lag_months=int(cfg.get("lag_months", 1)),
        vol_target=float(cfg.get("vol_target", 0.01)),
        min_obs=None if cfg.get("min_obs") is None else int(cfg["min_obs"]),
    )


def _merge_pipeline_flags(cfg: dict, args) -> dict:
    pipe = dict(cfg.get("pipeline", {}))
    if args.window is not None:
        pipe["window_months"] = args.window
    if args.lag_vol is not None:
        pipe["lag_months"] = args.lag_vol
    if args.vol_target is not None:
        pipe["vol_target"] = args.vol_target
    if args.min_obs is not None:
        pipe["min_obs"] = args.min_obs
    if args.allow_missing is not None:
        cfg["allow_missing"] = True
    return pipe


def _stats_row(series) -> dict:
    try:
        st = analytics.perf_stats(series)
    except analytics.UndefinedStatError as exc:
        raise ConfigError(f"undefined statistics for {series.name!r}: {exc}") from exc
    return {
        "sharpe_annual": st.sharpe_annual,
        "t_stat": st.t_stat,
        "mean_monthly": st.mean_monthly,
        "vol_monthly": st.vol_monthly,
        "n_months": st.n_months,
    }


# ---------------------------------------------------------------------------
# backtest


def _managed_panel(factors, market, pipe) -> panel.ReturnPanel:
    cols = []
    for asset in factors.assets:
        hedged = riskpipe.beta_hedge(factors.column(asset), market, pipe)
        cols.append(riskpipe.vol_normalize(hedged, pipe).values)
    return panel.ReturnPanel(factors.calendar, factors.assets, np.column_stack(cols))


def cmd_backtest(args, out_dir: Path) -> int:
    cfg = _load_config(args.config) if args.config else {}
    cfg["pipeline"] = _merge_pipeline_flags(cfg, args)
    for key, flag in (("factors", args.factors), ("market", args.market)):
        if flag is not None:
            cfg[key] = flag
    if args.m is not None:
        cfg["m"] = args.m
    if args.n is not None:
        cfg["n"] = args.n
    if "m" not in cfg or "n" not in cfg:
        raise ConfigError("backtest needs explicit lag m and holding period n")
    m, n = int(cfg["m"]), int(cfg["n"])

    resolved = {"command": "backtest", "seed": args.seed, **cfg}
    cfg_hash = _config_hash(resolved)

    allow = bool(cfg.get("allow_missing", False))
    factors = panel.load_panel(
        _require_path(cfg, "factors"), cfg.get("layout", "wide"), allow
    )
    market = panel.load_series(_require_path(cfg, "market"), allow)
    panel.require_aligned(factors, market)
    pipe = _pipeline_config(cfg["pipeline"])

    managed = _managed_panel(factors, market, pipe)
    strategies = [
        ("menagerie", None, None),
        ("ts", "sign", "both"),
        ("ts_winners", "sign", "winners"),
        ("ts_losers", "sign", "losers"),
        ("xs", "rank", "both"),
        ("xs_winners", "rank", "winners"),
        ("xs_losers", "rank", "losers"),
    ]
    risk_managed = bool(cfg.get("strategies_risk_managed", True))
    rows: dict[str, dict] = {}
    columns = []
    for key, weighting, leg in strategies:
        if key == "menagerie":
            series = riskpipe.menagerie(
                managed, pipe, risk_managed=bool(cfg.get("menagerie_risk_managed", True))
            )
        else:
            spec = momentum.StrategySpec(m, n, weighting, leg, risk_managed)
            series = momentum.strategy_pnl(managed, spec, pipe)
        rows[key] = _stats_row(series)
        columns.append(series.values)

    pnl_panel = panel.ReturnPanel(
        factors.calendar, tuple(key for key, *_ in strategies), np.column_stack(columns)
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    panel.emit_csv(pnl_panel, out_dir / "pnl.csv", _header("backtest", cfg_hash, args.seed))
    _write_json(
        out_dir / "stats.json",
        {**_header("backtest", cfg_hash, args.seed), "m": m, "n": n, "rows": rows},
    )
    for key, row in rows.items():
        print(f"{key:<12s} sharpe={row['sharpe_annual']:+.3f} t={row['t_stat']:+.2f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args, out_dir: Path) -> int:
    cfg = _load_config(args.config) if args.config else {}
    cfg["pipeline"] = _merge_pipeline_flags(cfg, args)
    if args.input is not None:
        cfg["factor_panel"] = args.input
    if args.m is not None:
        cfg["m"] = args.m
    if args.n is not None:
        cfg["n"] = args.n
    if args.stat is not None:
        cfg["stats"] = [args.stat]
    if args.direction is not None:
        cfg["direction"] = args.direction
    if args.control_series:
        cfg["control_series"] = list(args.control_series)

    m_values = _parse_range(cfg.get("m", "1..12"))
    n_values = _parse_range(cfg.get("n", "1..12"))
    stats = list(cfg.get("stats", ["sharpe"]))
    direction = cfg.get("direction", "factor-on-stock")
    if direction not in ("factor-on-stock", "stock-on-factor"):
        raise ConfigError(f"unknown direction {direction!r}")
    unknown = [s for s in stats if s not in ("sharpe", "corr", "residual")]
    if unknown:
        raise ConfigError(f"unknown statistics {unknown}")

    resolved = {"command": "sweep", "seed": args.seed, **cfg,
                "m": list(m_values), "n": list(n_values)}
    cfg_hash = _config_hash(resolved)

    allow = bool(cfg.get("allow_missing", True))
    layout = cfg.get("layout", "wide")
    factor_panel = panel.load_panel(_require_path(cfg, "factor_panel"), layout, allow)
    stock_panel = None
    if cfg.get("stock_panel"):
        stock_panel = panel.load_panel(_require_path(cfg, "stock_panel"), layout, allow)
    market = None
    if cfg.get("market"):
        market = panel.load_series(_require_path(cfg, "market"), allow, name="market")
    fixed_controls = []
    for p in cfg.get("control_series", []):
        if not Path(p).exists():
            raise ConfigError(f"control series path does not exist: {p}")
        fixed_controls.append(panel.load_series(p, True))

    factor_weighting = cfg.get("factor_weighting", "sign")
    stock_weighting = cfg.get("stock_weighting", "rank")
    if direction == "factor-on-stock":
        target_panel, target_weighting = factor_panel, factor_weighting
        other_panel, other_weighting = stock_panel, stock_weighting
    else:
        if stock_panel is None:
            raise ConfigError("direction stock-on-factor needs a stock_panel")
        target_panel, target_weighting = stock_panel, stock_weighting
        other_panel, other_weighting = factor_panel, factor_weighting
    if args.weighting is not None:
        target_weighting = args.weighting

    risk_managed = bool(cfg.get("risk_managed", False))
    pipe = _pipeline_config(cfg["pipeline"])
    min_months = int(cfg.get("min_months", 24))

    def other_momentum(m, n):
        spec = momentum.StrategySpec(m, n, other_weighting, "both", risk_managed)
        return momentum.strategy_pnl(other_panel, spec, pipe)

    def make_reference():
        if cfg.get("reference"):
            return panel.load_series(_require_path(cfg, "reference"), True)
        if fixed_controls:
            return fixed_controls[0]
        if other_panel is None:
            raise ConfigError("stat 'corr' needs a stock_panel, reference or control_series")
        return other_momentum

    def make_controls():
        fixed = []
        if cfg.get("menagerie_control", True):
            fixed.append(riskpipe.menagerie(factor_panel))
        if market is not None:
            fixed.append(market)
        elif cfg.get("market_control", True):
            raise ConfigError("stat 'residual' needs a market series (or market_control=false)")
        if fixed_controls:
            return fixed_controls + fixed
        if other_panel is None:
            raise ConfigError("stat 'residual' needs a stock_panel or control_series")
        return lambda m, n: [other_momentum(m, n)] + fixed

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for stat in stats:
        kwargs = {}
        if stat == "corr":
            kwargs["reference"] = make_reference()
        elif stat == "residual":
            kwargs["controls"] = make_controls()
        grid = momentum.grid_sweep(
            target_panel,
            m_values,
            n_values,
            target_weighting,
            {"sharpe": "sharpe", "corr": "corr", "residual": "residual_sharpe"}[stat],
            risk_managed=risk_managed,
            cfg=pipe,
            min_months=min_months,
            **kwargs,
        )
        if args.out is not None and len(stats) == 1:
            path = Path(args.out)
        else:
            path = out_dir / f"grid_{stat}.csv"
        header = _header("sweep", cfg_hash, args.seed)
        header["stat"] = grid.stat
        header["direction"] = direction
        panel.emit_csv(grid, path, header)
        written.append(str(path))
    print("wrote " + ", ".join(written))
    return EXIT_OK


# ---------------------------------------------------------------------------
# span


def cmd_span(args, out_dir: Path) -> int:
    cfg = _load_config(args.config) if args.config else {}
    if args.target is not None:
        cfg["target"] = args.target
    if args.controls:
        cfg["controls"] = list(args.controls)
    if not cfg.get("controls"):
        raise ConfigError("span needs at least one control series")
    resolved = {"command": "span", "seed": args.seed, **cfg}
    cfg_hash = _config_hash(resolved)

    target = panel.load_series(_require_path(cfg, "target"), True)
    controls = []
    for p in cfg["controls"]:
        if not Path(p).exists():
            raise ConfigError(f"control path does not exist: {p}")
        controls.append(panel.load_series(p, True))
    result = analytics.spanning_regression(target, controls)

    payload = {
        **_header("span", cfg_hash, args.seed),
        "target": target.name,
        "betas": dict(zip(result.control_names, result.betas)),
        "intercept": result.intercept,
        "r_squared": result.r_squared,
        "residual_sharpe": result.residual_stats.sharpe_annual,
        "residual_t": result.residual_stats.t_stat,
        "n_months": result.residual_stats.n_months,
        "residual_includes_intercept": True,
    }
    out_path = Path(args.out) if args.out else out_dir / "span.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out_path, payload)
    print(
        f"residual sharpe={payload['residual_sharpe']:+.3f} "
        f"t={payload['residual_t']:+.2f} r2={payload['r_squared']:.3f}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate / verify


def _model_params(args, cfg: dict) -> model.ModelParams:
    if args.params is not None:
        if not Path(args.params).exists():
            raise ConfigError(f"params path does not exist: {args.params}")
        return model.ModelParams.from_json(args.params)
    if "params" in cfg:
        return model.ModelParams.from_dict(cfg["params"])
    if "params_path" in cfg:
        return model.ModelParams.from_json(_require_path(cfg, "params_path"))
    return model.default_params()


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("a seed is mandatory for stochastic commands")
    return args.seed


def cmd_simulate(args, out_dir: Path) -> int:
    cfg = _load_config(args.config) if args.config else {}
    seed = _require_seed(args)
    params = _model_params(args, cfg)
    T = int(args.T if args.T is not None else cfg.get("T", 1200))
    burn_in = int(args.burn_in if args.burn_in is not None else cfg.get("burn_in", 500))
    resolved = {
        "command": "simulate",
        "seed": seed,
        "T": T,
        "burn_in": burn_in,
        "params": params.to_dict(),
    }
    cfg_hash = _config_hash(resolved)
    path = model.simulate(params, T, seed, burn_in)
    out = Path(args.out) if args.out else out_dir / "panel.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    panel.emit_csv(path.panel, out, _header("simulate", cfg_hash, seed))
    if args.factor_out:
        panel.emit_csv(path.factor, args.factor_out, _header("simulate", cfg_hash, seed))
    print(f"wrote {out} ({T} months x {params.n} assets)")
    return EXIT_OK


def cmd_verify(args, out_dir: Path) -> int:
    cfg = _load_config(args.config) if args.config else {}
    seed = _require_seed(args)
    params = _model_params(args, cfg)
    T = int(args.T if args.T is not None else cfg.get("T", 1_000_000))
    k_max = int(args.k_max if args.k_max is not None else cfg.get("k_max", 3))
    eq3 = cfg.get("eq3")
    if eq3 is not None:
        eq3 = dict(eq3)
        eq3["beta"] = np.asarray(eq3["beta"], float)
        eq3["factor"] = analytics.AR1Params(**eq3["factor"])

    resolved = {
        "command": "verify",
        "seed": seed,
        "T": T,
        "k_max": k_max,
        "params": params.to_dict(),
        "eq3": cfg.get("eq3"),
    }
    cfg_hash = _config_hash(resolved)

    report = model.verify_model(params, seed=seed, T=T, k_max=k_max, eq3=eq3)
    for check in report.checks:
        status = "INFO" if check.passed is None else ("PASS" if check.passed else "FAIL")
        se = "" if check.se is None else f" se={check.se:.3g}"
        print(f"{status} {check.name}: lhs={check.lhs:.6g} rhs={check.rhs:.6g}{se}")

    out_path = Path(args.report) if args.report else out_dir / "verify.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        **_header("verify", cfg_hash, seed),
        "T": T,
        "k_max": k_max,
        **report.to_dict(),
    }
    _write_json(out_path, payload)
    print(("all checks passed" if report.passed else "CHECKS FAILED") + f" -> {out_path}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# resample


def cmd_resample(args, out_dir: Path) -> int:
    if not Path(args.input).exists():
        raise ConfigError(f"input path does not exist: {args.input}")
    resolved = {"command": "resample", "seed": args.seed, "input": args.input,
                "layout": args.layout, "allow_missing": args.allow_missing}
    cfg_hash = _config_hash(resolved)
    daily = panel.load_panel(args.input, args.layout, args.allow_missing)
    monthly = panel.resample_monthly(daily)
    out = Path(args.out) if args.out else out_dir / "monthly.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    panel.emit_csv(monthly, out, _header("resample", cfg_hash, args.seed))
    print(f"wrote {out} ({monthly.n_periods} months)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _add_pipeline_flags(sub):
    sub.add_argument("--window", type=int, help="rolling window length in months")
    sub.add_argument("--lag-vol", type=int, help="lag of rolling estimates in months")
    sub.add_argument("--vol-target", type=float, help="monthly volatility target")
    sub.add_argument("--min-obs", type=int, help="minimum observations per window")
    sub.add_argument(
        "--allow-missing",
        action="store_true",
        default=None,
        help="read non-numeric CSV cells as missing markers",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factormom",
        description="Factor and stock momentum research engine",
    )
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--seed", type=int, help="seed for stochastic commands")
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument(
        "--threads", type=int, help="cap BLAS threads (results are thread-invariant)"
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("backtest", help="risk pipeline + momentum strategies + stats")
    p.add_argument("--factors", help="factor panel CSV")
    p.add_argument("--market", help="market series CSV")
    p.add_argument("--m", type=int, help="signal lag in months")
    p.add_argument("--n", type=int, help="signal holding period in months")
    _add_pipeline_flags(p)
    p.set_defaults(handler=cmd_backtest)

    p = sub.add_parser("sweep", help="statistic grids over (m, n) strategies")
    p.add_argument("--input", help="panel CSV to sweep")
    p.add_argument("--weighting", choices=momentum.WEIGHTINGS)
    p.add_argument("--m", help="lag range, e.g. 1..12")
    p.add_argument("--n", help="holding-period range, e.g. 1..12")
    p.add_argument("--stat", choices=("sharpe", "corr", "residual"))
    p.add_argument("--direction", choices=("factor-on-stock", "stock-on-factor"))
    p.add_argument("--control-series", nargs="+", help="fixed control series CSVs")
    p.add_argument("--out", help="output CSV (single-stat runs)")
    _add_pipeline_flags(p)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("span", help="full-sample spanning regression")
    p.add_argument("--target", help="target PNL CSV")
    p.add_argument("--controls", nargs="+", help="control PNL CSVs")
    p.add_argument("--out", help="output JSON")
    p.set_defaults(handler=cmd_span)

    p = sub.add_parser("simulate", help="simulate the feedback-trading model")
    p.add_argument("--params", help="model parameter JSON")
    p.add_argument("--T", type=int, help="months to simulate")
    p.add_argument("--burn-in", type=int, help="start-up months to discard")
    p.add_argument("--out", help="output panel CSV")
    p.add_argument("--factor-out", help="also write the factor series CSV")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("verify", help="closed-form vs Monte Carlo check battery")
    p.add_argument("--params", help="model parameter JSON (default: shipped set)")
    p.add_argument("--T", type=int, help="path length for Monte Carlo checks")
    p.add_argument("--k-max", type=int, help="autocovariance orders to check")
    p.add_argument("--report", help="output JSON report")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("resample", help="compound a daily panel to monthly")
    p.add_argument("--input", required=True, help="daily panel CSV")
    p.add_argument("--out", help="output CSV")
    p.add_argument("--layout", default="wide", choices=("wide", "long"))
    p.add_argument("--allow-missing", action="store_true")
    p.set_defaults(handler=cmd_resample)

    return parser


def _limit_threads(n: int) -> None:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(n)
    except ImportError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        _limit_threads(args.threads)
    out_dir = Path(args.out_dir)
    try:
        return args.handler(args, out_dir)
    except (
        ConfigError,
        ValueError,
        KeyError,
        model.ParameterError,
        analytics.NonStationaryError,
        analytics.RankDeficiencyError,
        analytics.UndefinedStatError,
        riskpipe.InsufficientHistoryError,
        momentum.LookaheadError,
        panel.PanelError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
