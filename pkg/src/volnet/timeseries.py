"""Price/return ingestion, calendar alignment, and rolling statistics.

All containers are immutable after construction and safe to share across
threads; every operation returns a new object.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from volnet.errors import DomainError, InputError, ParseError

RAW = "raw"
PERCENT = "percent"
SCALES = (RAW, PERCENT)

INTERSECT = "intersect"
PER_MARKET = "per-market"
ALIGNMENTS = (INTERSECT, PER_MARKET)


@dataclass(frozen=True)
class DatedSeries:
    """One value per trading date; dates strictly increasing, values finite."""

    dates: np.ndarray  # datetime64[ns], strictly increasing
    values: np.ndarray  # float64, same length

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[ns]")
        values = np.asarray(self.values, dtype=np.float64)
        if dates.shape != values.shape or dates.ndim != 1:
            raise InputError("dates and values must be 1-d and equally long")
        if len(dates) > 1 and not (np.diff(dates).astype(np.int64) > 0).all():
            raise InputError("dates must be strictly increasing")
        if not np.isfinite(values).all():
            raise InputError("values must be finite")
        dates.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def restrict(self, dates):
        """Subseries on the given dates (all must be present)."""
        dates = np.asarray(dates, dtype="datetime64[ns]")
        idx = np.searchsorted(self.dates, dates)
        if (idx >= len(self.dates)).any() or (self.dates[np.minimum(idx, len(self.dates) - 1)] != dates).any():
            raise InputError("restriction dates must all be present in the series")
        return DatedSeries(dates, self.values[idx])

    def to_pandas(self):
        return pd.Series(self.values, index=pd.DatetimeIndex(self.dates))


@dataclass(frozen=True)
class PricePanel:
    markets: tuple
    series: dict  # market -> DatedSeries of prices

    def __post_init__(self):
        object.__setattr__(self, "markets", tuple(self.markets))
        if set(self.markets) != set(self.series):
            raise InputError("markets and series keys disagree")


@dataclass(frozen=True)
class ReturnPanel:
    """Date-aligned (or per-market) log returns for a set of markets."""

    markets: tuple
    returns: dict  # market -> DatedSeries
    scale: str = PERCENT
    aligned: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "markets", tuple(self.markets))
        if set(self.markets) != set(self.returns):
            raise InputError("markets and returns keys disagree")
        if self.scale not in SCALES:
            raise InputError(f"scale must be one of {SCALES}")

    @property
    def span(self):
        first = min(s.dates[0] for s in self.returns.values())
        last = max(s.dates[-1] for s in self.returns.values())
        return first, last

    def common_dates(self):
        dates = None
        for m in self.markets:
            d = self.returns[m].dates
            dates = d if dates is None else np.intersect1d(dates, d)
        return dates


def load_prices(path, scale=PERCENT):
    """Read a `date,market,price` CSV into per-market price series.

    Rejects duplicate (date, market) rows and non-positive prices; errors
    carry the 1-based CSV line number (header is line 1).
    """
    if scale not in SCALES:
        raise InputError(f"scale must be one of {SCALES}")
    try:
        df = pd.read_csv(path, dtype={"market": str})
    except pd.errors.EmptyDataError:
        raise InputError(f"empty prices file: {path}") from None
    expected = ["date", "market", "price"]
    if list(df.columns) != expected:
        raise ParseError(f"expected header {expected}, got {list(df.columns)}")
    if df.empty:
        raise InputError(f"no price rows in {path}")

    dates = pd.to_datetime(df["date"], format="ISO8601", errors="coerce")
    bad = np.flatnonzero(dates.isna().to_numpy())
    if bad.size:
        raise ParseError(f"unparseable date {df['date'].iloc[bad[0]]!r}", line=int(bad[0]) + 2)
    prices = pd.to_numeric(df["price"], errors="coerce")
    bad = np.flatnonzero(prices.isna().to_numpy())
    if bad.size:
        raise ParseError(f"unparseable price {df['price'].iloc[bad[0]]!r}", line=int(bad[0]) + 2)
    bad = np.flatnonzero((prices <= 0).to_numpy())
    if bad.size:
        raise DomainError(
            f"non-positive price {prices.iloc[bad[0]]} at line {int(bad[0]) + 2}"
        )
    dup = df.duplicated(subset=["date", "market"], keep="first").to_numpy()
    if dup.any():
        first = int(np.flatnonzero(dup)[0])
        raise ParseError(
            f"duplicate (date, market) row ({df['date'].iloc[first]}, {df['market'].iloc[first]})",
            line=first + 2,
        )

    work = pd.DataFrame({"date": dates, "market": df["market"], "price": prices})
    series = {}
    for market, grp in work.groupby("market", sort=True):
        grp = grp.sort_values("date")
        series[str(market)] = DatedSeries(grp["date"].to_numpy(), grp["price"].to_numpy())
    return PricePanel(markets=sorted(series), series=series)


def to_log_returns(prices, scale=PERCENT):
    """Log returns ln(P_t) - ln(P_{t-1}) per market; x100 when scale=percent."""
    if scale not in SCALES:
        raise InputError(f"scale must be one of {SCALES}")
    mult = 100.0 if scale == PERCENT else 1.0
    out = {}
    for market in prices.markets:
        s = prices.series[market]
        if len(s) < 2:
            raise InputError(f"market {market} has fewer than 2 observations")
        r = mult * np.diff(np.log(s.values))
        out[market] = DatedSeries(s.dates[1:], r)
    return ReturnPanel(markets=prices.markets, returns=out, scale=scale)


def align_panel(panel, mode=INTERSECT):
    """Calendar alignment: `intersect` keeps dates present in every market
    (required by the network models); `per-market` is the identity."""
    if mode not in ALIGNMENTS:
        raise InputError(f"mode must be one of {ALIGNMENTS}")
    if len(panel.markets) < 2:
        raise InputError("align_panel needs at least 2 markets")
    if mode == PER_MARKET:
        return panel
    dates = panel.common_dates()
    if dates is None or len(dates) == 0:
        raise InputError("no dates common to all markets")
    aligned = {m: panel.returns[m].restrict(dates) for m in panel.markets}
    return ReturnPanel(markets=panel.markets, returns=aligned, scale=panel.scale, aligned=True)


def rolling_median_mad(series, window):
    """Strictly past-looking rolling median and MAD.

    At date t both statistics cover the `window` observations ending at t-1,
    so the first `window` dates emit no value.
    """
    if window < 2:
        raise InputError("window must be >= 2")
    n = len(series)
    if n < window:
        raise InputError(f"window {window} exceeds series length {n}")
    if n == window:
        # every date's trailing window would need data before the series
        return (
            DatedSeries(series.dates[:0], series.values[:0]),
            DatedSeries(series.dates[:0], series.values[:0]),
        )
    sw = np.lib.stride_tricks.sliding_window_view(series.values[:-1], window)
    med = np.median(sw, axis=1)
    mad = np.median(np.abs(sw - med[:, None]), axis=1)
    dates = series.dates[window:]
    return DatedSeries(dates, med), DatedSeries(dates, mad)
