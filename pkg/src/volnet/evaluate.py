"""Model comparison and forecast-accuracy statistics: RMSE/SSE/AIC tables,
Diebold-Mariano with a Newey-West long-run variance, the Clark-McCracken
encompassing statistic for nested models, and rolling DM diagnostics."""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import norm

from volnet.errors import InputError
from volnet.linreg import aic_approx, ols

SQUARED = "squared"
ABSOLUTE = "absolute"
LOSSES = (SQUARED, ABSOLUTE)

MODEL_ORDER = ("M0", "M1", "M2")
IMPROVEMENT_PAIRS = (("M0", "M1"), ("M1", "M2"), ("M0", "M2"))

INSAMPLE = "insample"
EXPANDING = "expanding"


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    pvalue: float
    t_obs: int
    flags: tuple = ()


def _loss(e, loss):
    if loss == SQUARED:
        return e * e
    if loss == ABSOLUTE:
        return np.abs(e)
    raise InputError(f"loss must be one of {LOSSES}")


def _check_aligned(e0, e1):
    if not np.array_equal(e0.dates, e1.dates):
        raise InputError("error series must share identical dates")


def newey_west_lrv(d, bandwidth):
    """Bartlett-kernel long-run variance of a scalar series."""
    d = np.asarray(d, dtype=np.float64)
    T = len(d)
    dc = d - d.mean()
    lrv = float(dc @ dc) / T
    for k in range(1, bandwidth + 1):
        gamma = float(dc[k:] @ dc[:-k]) / T
        lrv += 2.0 * (1.0 - k / (bandwidth + 1.0)) * gamma
    return lrv


def dm_test(e0, e1, loss=SQUARED, bandwidth=None):
    """Diebold-Mariano test on d_t = loss(e0_t) - loss(e1_t).

    A negative statistic means the first series has the lower loss, so
    passing the richer model's errors first yields negative statistics
    when it outperforms. Two-sided normal p-value; HAC bandwidth defaults
    to floor(T^(1/3)).
    """
    _check_aligned(e0, e1)
    T = len(e0)
    if T < 30:
        raise InputError(f"need at least 30 observations, got {T}")
    d = _loss(e0.values, loss) - _loss(e1.values, loss)
    if np.var(d) <= 1e-300:
        return TestResult("DM", 0.0, 1.0, T, flags=("zero_variance",))
    bw = int(np.floor(T ** (1.0 / 3.0))) if bandwidth is None else int(bandwidth)
    lrv = newey_west_lrv(d, bw)
    if lrv <= 0.0:
        return TestResult("DM", 0.0, 1.0, T, flags=("zero_variance",))
    stat = float(d.mean() / np.sqrt(lrv / T))
    return TestResult("DM", stat, float(2.0 * norm.sf(abs(stat))), T)


def enc_new(e_restricted, e_unrestricted):
    """Clark-McCracken encompassing statistic for nested models:
    T * mean(e0*(e0-e1)) / mean(e1^2), e0 restricted, e1 unrestricted.

    The p-value is a normal upper-tail approximation; the nested-model
    null distribution is non-standard, hence the 'approx' flag.
    """
    _check_aligned(e_restricted, e_unrestricted)
    e0 = e_restricted.values
    e1 = e_unrestricted.values
    T = len(e0)
    denom = float(np.mean(e1 * e1))
    if denom <= 1e-300:
        raise InputError("unrestricted errors are identically zero; ENC-NEW undefined")
    stat = float(T * np.mean(e0 * (e0 - e1)) / denom)
    return TestResult("ENC_NEW", stat, float(norm.sf(stat)), T, flags=("approx",))


def rolling_dm(e0, e1, window=500, loss=SQUARED, bandwidth=None):
    """DM statistic over trailing windows, one row per window end date,
    with +/-1.96 reference bands."""
    _check_aligned(e0, e1)
    T = len(e0)
    if T < window:
        raise InputError(f"series length {T} is below the window {window}")
    rows = []
    for end in range(window, T + 1):
        sl = slice(end - window, end)
        sub0 = type(e0)(e0.dates[sl], e0.values[sl])
        sub1 = type(e1)(e1.dates[sl], e1.values[sl])
        res = dm_test(sub0, sub1, loss=loss, bandwidth=bandwidth)
        rows.append({
            "date": pd.Timestamp(e0.dates[end - 1]),
            "stat": res.statistic,
            "band_lo": -1.96,
            "band_hi": 1.96,
            "degenerate": "zero_variance" in res.flags,
        })
    return pd.DataFrame(rows)


def fitted_series(fit):
    """Fitted-volatility series of any model-fit object."""
    fs = getattr(fit, "fitted_sigma", None)
    return fs if fs is not None else fit.fitted


def model_errors(fit, target, mode=INSAMPLE, min_obs=100):
    """One-step errors target - fitted.

    insample: errors at the estimated coefficients. expanding: for each t,
    coefficients re-estimated on observations before t (pseudo
    out-of-sample); state/profile parameters stay at their full-sample
    values.
    """
    fitted = fitted_series(fit)
    target = target.restrict(fitted.dates)
    if mode == INSAMPLE:
        return type(target)(fitted.dates, target.values - fitted.values)
    if mode != EXPANDING:
        raise InputError(f"mode must be '{INSAMPLE}' or '{EXPANDING}'")
    reg = getattr(fit, "regression", None)
    if reg is None:
        reg = fit
    X, y = reg.design, reg.y
    if X is None:
        raise InputError("fit does not carry its design matrix")
    n = len(y)
    if n <= min_obs:
        raise InputError(f"need more than {min_obs} observations for expanding errors")
    errs = np.empty(n - min_obs)
    for t in range(min_obs, n):
        beta, _, _, _ = ols(y[:t], X[:t])
        errs[t - min_obs] = y[t] - X[t] @ beta
    return type(target)(fitted.dates[min_obs:], errs)


def compare_models(fits_by_market, targets):
    """RMSE/SSE/AIC comparison rows plus pairwise improvement percentages.

    fits_by_market: market -> {"M0": fit, "M1": fit, "M2": fit}, all three
    on identical samples (checked). Improvements are
    100*(RMSE_A - RMSE_B)/RMSE_A for (M0,M1), (M1,M2), (M0,M2).
    """
    rows = []
    improvements = []
    for market in sorted(fits_by_market):
        fits = fits_by_market[market]
        missing = [m for m in MODEL_ORDER if m not in fits]
        if missing:
            raise InputError(f"market {market}: missing fits {missing}")
        dates0 = fitted_series(fits["M0"]).dates
        for label in MODEL_ORDER[1:]:
            if not np.array_equal(fitted_series(fits[label]).dates, dates0):
                raise InputError(
                    f"market {market}: {label} sample differs from M0; "
                    "fit all models on identical samples")
        if targets is not None:
            targets[market].restrict(dates0)  # raises if samples disagree
        for label in MODEL_ORDER:
            f = fits[label]
            rows.append({"country": market, "model": label, "rmse": f.rmse,
                         "sse": f.sse, "n": f.n, "aic_approx": f.aic_approx})
        rmse = {label: fits[label].rmse for label in MODEL_ORDER}
        for a, b in IMPROVEMENT_PAIRS:
            improvements.append({
                "country": market,
                "comparison": f"{b}_vs_{a}",
                "improvement_pct": 100.0 * (rmse[a] - rmse[b]) / rmse[a],
            })
    return pd.DataFrame(rows), pd.DataFrame(improvements)
