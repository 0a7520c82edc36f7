"""Exogenous shock construction: policy event indicators, information
shocks from abnormal absolute returns, exponentially decaying crisis
memory, and the feasible realized-volatility proxy."""

import warnings
from dataclasses import dataclass

import numpy as np

from volnet.errors import InputError
from volnet.timeseries import DatedSeries, rolling_median_mad

MAD_FLOOR = 1e-8
DEFAULT_LAMBDA = 0.02
# decay rates tabulated by the sensitivity analysis
LAMBDA_SENSITIVITY_GRID = (0.005, 0.010, 0.020)

# Default crisis onsets (placeholder dates for the three global stress
# episodes; override via the events CSV).
DEFAULT_CRISES = (
    ("2013-05-22", 1.0, "taper"),
    ("2020-02-24", 1.0, "covid"),
    ("2022-03-16", 1.0, "tightening"),
)


@dataclass(frozen=True)
class CrisisEvent:
    onset: np.datetime64
    magnitude: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "onset", np.datetime64(self.onset, "ns"))
        if self.magnitude <= 0.0:
            raise InputError("crisis magnitude must be positive")


@dataclass(frozen=True)
class ShockSet:
    """Per-market shock bundle feeding the institutional-response models."""

    deltaP: DatedSeries  # policy event indicator, values in {0, 1}
    deltaI: DatedSeries  # information shock
    crisis_memory: DatedSeries
    lam: float
    rv: DatedSeries = None  # realized-volatility proxy (variance scale)
    kappa: float = None

    def __post_init__(self):
        vals = self.deltaP.values
        if not np.isin(vals, (0.0, 1.0)).all():
            raise InputError("deltaP must be a 0/1 indicator")
        if (self.crisis_memory.values < 0).any():
            raise InputError("crisis memory must be non-negative")
        if self.rv is not None and (self.rv.values < 0).any():
            raise InputError("realized-volatility proxy must be non-negative")


def _snap_to_calendar(dates, calendar):
    """Map each date to itself if trading, else the next trading date;
    dates beyond the calendar are dropped with a warning."""
    idx = np.searchsorted(calendar, dates)
    keep = idx < len(calendar)
    if not keep.all():
        dropped = np.asarray(dates)[~keep]
        warnings.warn(f"{dropped.size} event(s) after the calendar end dropped")
    return idx[keep], keep


def policy_shocks(event_dates, calendar, window=0):
    """0/1 indicator of policy events on a trading calendar.

    Events on non-trading days attach to the next trading day; window > 0
    widens each event by +/- window trading days.
    """
    if window < 0:
        raise InputError("window half-width must be >= 0")
    calendar = np.asarray(calendar, dtype="datetime64[ns]")
    values = np.zeros(len(calendar))
    event_dates = np.asarray(event_dates, dtype="datetime64[ns]")
    if event_dates.size:
        before = event_dates < calendar[0]
        if before.any():
            warnings.warn(f"{int(before.sum())} event(s) before the calendar start dropped")
            event_dates = event_dates[~before]
        idx, _ = _snap_to_calendar(event_dates, calendar)
        for i in idx:
            values[max(0, i - window):i + window + 1] = 1.0
    return DatedSeries(calendar, values)


def information_shocks(returns, window=60):
    """Deviation of |r_t| from its trailing median, in trailing-MAD units.

    The window is strictly past-looking; the first `window` dates are 0.
    A zero MAD is floored at MAD_FLOOR so thin, constant-return stretches
    stay finite.
    """
    if len(returns) <= window:
        raise InputError(f"need more than {window} observations")
    absr = DatedSeries(returns.dates, np.abs(returns.values))
    med, mad = rolling_median_mad(absr, window)
    out = np.zeros(len(returns))
    out[window:] = (absr.values[window:] - med.values) / np.maximum(mad.values, MAD_FLOOR)
    return DatedSeries(returns.dates, out)


def crisis_memory(events, lam, calendar):
    """C_t = sum_k mag_k * exp(-lam * d(t, onset_k)) for t >= onset_k,
    with d measured in trading days.

    Onsets on non-trading days snap to the next trading day; onsets before
    the calendar start snap to the first date (pre-sample decay is not
    reconstructed). Onsets after the calendar end are dropped with a warning.
    """
    if lam <= 0.0:
        raise InputError("decay rate lambda must be positive")
    calendar = np.asarray(calendar, dtype="datetime64[ns]")
    t = np.arange(len(calendar), dtype=np.float64)
    values = np.zeros(len(calendar))
    for ev in events:
        if ev.onset > calendar[-1]:
            warnings.warn(f"crisis event {ev.label or ev.onset} after calendar end dropped")
            continue
        onset_idx = int(np.searchsorted(calendar, ev.onset))
        values[onset_idx:] += ev.magnitude * np.exp(-lam * (t[onset_idx:] - onset_idx))
    return DatedSeries(calendar, values)


def rv_proxy(returns, baseline_sigma):
    """Feasible realized-volatility proxy RV_t = sigma2_t * kappa * |r_t|.

    kappa solves the least-squares match of the proxy to squared returns:
    kappa = sum(s2|r| * r^2) / sum((s2|r|)^2). The volatility-scale target
    used downstream is sqrt(RV).
    """
    if not np.array_equal(returns.dates, baseline_sigma.dates):
        raise InputError("returns and baseline sigma must share dates")
    r = returns.values
    s2 = baseline_sigma.values ** 2
    x = s2 * np.abs(r)
    denom = float(x @ x)
    if denom <= 0.0:
        raise InputError("all-zero returns: kappa is undefined")
    kappa = float(x @ (r * r)) / denom
    rv = s2 * kappa * np.abs(r)
    return DatedSeries(returns.dates, rv), kappa


def volatility_target(rv):
    """sqrt(RV): the sigma-scale series targeted by the variance regressions."""
    return DatedSeries(rv.dates, np.sqrt(rv.values))
