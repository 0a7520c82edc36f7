"""Mixed-frequency mapping of monthly policy-uncertainty series into a
daily institutional-learning index.

Each trading day gets a weighted average of the K most recent monthly
values (lag 1 = the day's own month), sign-flipped so that higher
uncertainty lowers the index, then standardized per market.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from volnet.errors import InputError
from volnet.timeseries import DatedSeries

EXP_ALMON = "exp_almon"
BETA = "beta"
SCHEMES = (EXP_ALMON, BETA)


@dataclass(frozen=True)
class MidasConfig:
    n_lags: int = 12
    scheme: str = EXP_ALMON
    theta1: float = -0.1
    theta2: float = 0.0
    standardize: bool = True

    def __post_init__(self):
        if self.n_lags < 1:
            raise InputError("n_lags must be >= 1")
        if self.scheme not in SCHEMES:
            raise InputError(f"scheme must be one of {SCHEMES}")


@dataclass(frozen=True)
class InstitutionalIndex:
    series: DatedSeries
    config: MidasConfig
    standardized: bool


def midas_weights(config):
    """Non-negative lag weights summing to 1 (lag 1 = most recent month)."""
    k = np.arange(1, config.n_lags + 1, dtype=np.float64)
    if config.scheme == EXP_ALMON:
        expo = config.theta1 * k + config.theta2 * k * k
        expo = expo - expo.max()  # normalization-invariant overflow guard
        if not np.isfinite(expo).all() or expo.min() < -700.0:
            raise InputError("exponential-Almon exponent out of range")
        w = np.exp(expo)
    else:
        if config.theta1 <= 0.0 or config.theta2 <= 0.0:
            raise InputError("beta scheme needs positive theta1, theta2")
        u = k / (config.n_lags + 1.0)
        w = u ** (config.theta1 - 1.0) * (1.0 - u) ** (config.theta2 - 1.0)
        if not np.isfinite(w).all():
            raise InputError("beta-scheme weights out of range")
    return w / w.sum()


def build_index(epu_monthly, calendar, config=None):
    """Daily institutional index from a month-indexed uncertainty series.

    epu_monthly: mapping or pandas Series keyed by 'YYYY-MM' month labels.
    Raises when fewer than n_lags months precede the first calendar date;
    the message names the earliest feasible trading date.
    """
    config = config or MidasConfig()
    if isinstance(epu_monthly, pd.Series):
        epu_monthly = {str(k): float(v) for k, v in epu_monthly.items()}
    months = sorted(epu_monthly)
    periods = pd.PeriodIndex(months, freq="M")
    if len(periods) > 1 and not ((periods[1:] - periods[:-1]).map(lambda d: d.n) == 1).all():
        raise InputError("monthly series has gaps")
    epu = np.array([float(epu_monthly[m]) for m in months])

    calendar = np.asarray(calendar, dtype="datetime64[ns]")
    cal_months = pd.DatetimeIndex(calendar).to_period("M")
    w = midas_weights(config)
    K = config.n_lags

    # position of each calendar date's month within the monthly series
    pos = periods.searchsorted(cal_months)
    missing = (pos >= len(periods)) | (periods[np.minimum(pos, len(periods) - 1)] != cal_months)
    if missing.any():
        raise InputError("monthly series does not cover every calendar month")
    if (pos < K - 1).any():
        feasible = np.flatnonzero(pos >= K - 1)
        if feasible.size == 0:
            raise InputError(
                f"need {K} months of history; none of the calendar is feasible")
        raise InputError(
            "insufficient monthly history before the calendar start; "
            f"earliest feasible date is {np.datetime_as_string(calendar[feasible[0]], unit='D')}")

    # lag k weight applies to month (current - k + 1)
    lagged = np.stack([epu[pos - k] for k in range(K)], axis=1)
    raw = -(lagged @ w)

    standardized = False
    if config.standardize:
        sd = raw.std()
        if sd <= 1e-12:
            warnings.warn("constant index pre-standardization; standardization skipped")
        else:
            raw = (raw - raw.mean()) / sd
            standardized = True
    return InstitutionalIndex(series=DatedSeries(calendar, raw), config=config,
                              standardized=standardized)


def step_interpolate(annual_values, calendar):
    """Step interpolation of a low-frequency series onto a trading calendar
    (plot helper for comparing against the smooth index)."""
    calendar = np.asarray(calendar, dtype="datetime64[ns]")
    knots = sorted(annual_values)
    knot_dates = np.array([np.datetime64(k, "ns") for k in knots])
    vals = np.array([float(annual_values[k]) for k in knots])
    idx = np.clip(np.searchsorted(knot_dates, calendar, side="right") - 1, 0, len(vals) - 1)
    return DatedSeries(calendar, vals[idx])
