"""
Causal risk management for PNL series: rolling beta-hedge against a market
series, rolling volatility normalization to a constant target, and the
equal-risk average of a factor panel ("menagerie").

Every estimate used at date t is computed on a trailing window that ends at
t - lag, so no output ever looks ahead. Months before the first complete
window are missing rather than computed on shrunken windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .panel import NamedSeries, ReturnPanel, require_aligned

__all__ = [
    "InsufficientHistoryError",
    "PipelineConfig",
    "PnlSeries",
    "beta_hedge",
    "menagerie",
    "vol_normalize",
]


class InsufficientHistoryError(Exception):
    """Not enough observations to ever fill one estimation window."""


@dataclass(frozen=True)
class PipelineConfig:
    """Rolling-window settings shared by all pipeline stages.

    ``lag_months`` >= 1 keeps every estimate strictly causal: the window
    used at date t ends at t - lag_months.
    """

    window_months: int = 36
    lag_months: int = 1
    vol_target: float = 0.01
    min_obs: int | None = None

    def __post_init__(self):
        if self.window_months < 2:
            raise ValueError("window_months must be >= 2")
        if self.lag_months < 1:
            raise ValueError("lag_months must be >= 1 (causality)")
        if not self.vol_target > 0:
            raise ValueError("vol_target must be positive")
        if self.min_obs is not None and not 2 <= self.min_obs <= self.window_months:
            raise ValueError("min_obs must lie in [2, window_months]")

    @property
    def effective_min_obs(self) -> int:
        return self.window_months if self.min_obs is None else self.min_obs


@dataclass(frozen=True)
class PnlSeries(NamedSeries):
    """A strategy return series with a record of the stages applied to it."""

    meta: tuple[str, ...] = ()


def _as_pnl(series: NamedSeries, values: np.ndarray, stage: str) -> PnlSeries:
    meta = getattr(series, "meta", ())
    return PnlSeries(series.calendar, series.name, values, meta + (stage,))


def _window_moments(values: np.ndarray, window: int):
    """Per trailing window: count of finite entries, mean, demeaned view.

    Windows are rows of a (T - window + 1, window) view; window j ends at
    index j + window - 1. The demeaned form keeps exactly-constant windows
    at exactly zero variance.
    """
    win = sliding_window_view(values, window)
    finite = np.isfinite(win)
    cnt = finite.sum(axis=1)
    with np.errstate(invalid="ignore"):
        mean = np.where(cnt > 0, np.nansum(win, axis=1) / np.maximum(cnt, 1), np.nan)
        dm = np.where(finite, win - mean[:, None], 0.0)
    # exactly-constant windows must have exactly zero spread, but the rounded
    # mean can leave 1-ulp residues; detect and zero them
    lo = np.where(finite, win, np.inf).min(axis=1)
    hi = np.where(finite, win, -np.inf).max(axis=1)
    dm[(lo == hi) & (cnt > 0)] = 0.0
    return cnt, mean, dm


def beta_hedge(factor: NamedSeries, market: NamedSeries, cfg: PipelineConfig | None = None) -> PnlSeries:
    """Subtract the trailing-window market beta from a factor PNL.

    output_t = factor_t - beta_{t-lag} * market_t, where beta is the OLS
    slope of factor on market over the ``window_months`` trailing months
    ending at t - lag. Windows with zero market variance carry the previous
    beta forward; windows with fewer than ``min_obs`` overlapping months are
    missing, as is the burn-in before the first complete window.
    """
    cfg = cfg or PipelineConfig()
    cal = require_aligned(factor, market)
    W, L, min_obs = cfg.window_months, cfg.lag_months, cfg.effective_min_obs
    T = len(cal)
    out = np.full(T, np.nan)
    if T < W:
        raise InsufficientHistoryError(
            f"{T} months of data cannot fill a {W}-month window"
        )

    pair = np.isfinite(factor.values) & np.isfinite(market.values)
    f = np.where(pair, factor.values, np.nan)
    m = np.where(pair, market.values, np.nan)
    cnt, _, dm = _window_moments(m, W)
    _, _, df = _window_moments(f, W)
    if not np.any(cnt >= min_obs):
        raise InsufficientHistoryError(
            f"no window holds {min_obs} overlapping factor/market months"
        )
    var = (dm * dm).sum(axis=1)
    cov = (dm * df).sum(axis=1)

    n_win = len(var)
    betas = np.full(n_win, np.nan)
    last = np.nan
    for j in range(n_win):
        if cnt[j] < min_obs:
            continue
        if var[j] > 0.0:
            last = cov[j] / var[j]
        # zero market variance: keep the previous beta if there is one
        if np.isfinite(last):
            betas[j] = last

    # window ending at t - L is window index t - L - (W - 1)
    t = np.arange(W + L - 1, T)
    b = betas[t - L - (W - 1)]
    out[t] = factor.values[t] - b * market.values[t]
    return _as_pnl(factor, out, f"beta_hedge(window={W},lag={L})")


def vol_normalize(series: NamedSeries, cfg: PipelineConfig | None = None) -> PnlSeries:
    """Scale a series to a constant volatility target.

    output_t = vol_target * x_t / sigma_{t-lag}, where sigma is the sample
    standard deviation over the trailing window ending at t - lag. Months
    whose window has fewer than ``min_obs`` observations, or zero standard
    deviation, are missing.
    """
    cfg = cfg or PipelineConfig()
    W, L, min_obs = cfg.window_months, cfg.lag_months, cfg.effective_min_obs
    T = len(series.calendar)
    if T < W:
        raise InsufficientHistoryError(
            f"{T} months of data cannot fill a {W}-month window"
        )
    cnt, _, dx = _window_moments(series.values, W)
    if not np.any(cnt >= min_obs):
        raise InsufficientHistoryError(f"no window holds {min_obs} observations")
    with np.errstate(invalid="ignore", divide="ignore"):
        var = np.where(cnt >= 2, (dx * dx).sum(axis=1) / np.maximum(cnt - 1, 1), np.nan)
        sd = np.sqrt(var)
        sd = np.where((cnt >= min_obs) & (sd > 0.0), sd, np.nan)

    out = np.full(T, np.nan)
    t = np.arange(W + L - 1, T)
    out[t] = cfg.vol_target * series.values[t] / sd[t - L - (W - 1)]
    stage = f"vol_normalize(window={W},lag={L},target={cfg.vol_target:g})"
    return _as_pnl(series, out, stage)


def menagerie(
    factors: ReturnPanel,
    cfg: PipelineConfig | None = None,
    risk_managed: bool = False,
) -> PnlSeries:
    """Equal-weight sum of a (risk-managed) factor panel, $1 in each factor.

    Rows with missing factors sum over the available ones; all-missing rows
    are missing. With ``risk_managed`` the summed series is afterwards run
    through :func:`vol_normalize`.
    """
    finite = np.isfinite(factors.values)
    total = np.where(finite, factors.values, 0.0).sum(axis=1)
    values = np.where(finite.any(axis=1), total, np.nan)
    out = PnlSeries(
        factors.calendar,
        "menagerie",
        values,
        (f"menagerie(sum_available,n_factors={factors.n_assets})",),
    )
    if risk_managed:
        out = vol_normalize(out, cfg)
    return out
