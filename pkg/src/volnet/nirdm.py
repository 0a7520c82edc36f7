"""Network-integrated institutional-response model: the IRDM variance
equation plus two cross-market spillover regressors, one through the
time-varying correlation network and one through static institutional
similarity (lagged)."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from volnet import optimizer as opt
from volnet.errors import InputError
from volnet.irdm import (IrdmStateParams, RHO_GRID, THETA2_GRID,
                         variance_columns)
from volnet.kernels import arx_filter
from volnet.linreg import variance_equation
from volnet.networks import LAG1
from volnet.timeseries import DatedSeries

VARIANT_LABELS = {
    "real": "Real network",
    "placebo_permuted": "Placebo permuted network",
    "placebo_shifted": "Placebo shifted network",
    "lag1": "Lag1 network",
    "sparsified": "Sparsified network",
}


@dataclass(frozen=True)
class NirdmFit:
    state: IrdmStateParams
    b0: float
    b1: float
    b2: float
    psi: float
    gamma1: float
    gamma2: float
    gamma3: float
    fitted_sigma: DatedSeries
    rmse: float
    sse: float
    aic_approx: float
    state_series: DatedSeries
    net_c: DatedSeries
    net_i: DatedSeries
    n: int
    dropped: tuple
    regression: object = None  # underlying RegressionFit


def _state_matrix(states, net):
    """(T, n) matrix of per-market states on the network dates."""
    cols = []
    for m in net.markets:
        if m not in states:
            raise InputError(f"state series missing for market {m!r}")
        s = states[m]
        if not np.array_equal(s.dates, net.dates):
            s = s.restrict(net.dates)
        cols.append(s.values)
    return np.column_stack(cols)


def spillover_terms(states, net, market):
    """Network-weighted foreign states for one market.

    netR_C_t = sum_j W^C[t,i,j] * R[t,j] (for the lag1 variant:
    W^C[t-1,i,j] * R[t-1,j]); netR_I_t = sum_j W^I[i,j] * R[t-1,j].
    Lagged terms drop the first date.
    """
    i = net.market_index(market)
    R = _state_matrix(states, net)
    if net.variant == LAG1:
        net_c = np.einsum("tj,tj->t", net.wc[:-1, i, :], R[:-1])
        dates_c = net.dates[1:]
    else:
        net_c = np.einsum("tj,tj->t", net.wc[:, i, :], R)
        dates_c = net.dates
    net_i = R[:-1] @ net.wi[i, :]
    return DatedSeries(dates_c, net_c), DatedSeries(net.dates[1:], net_i)


def fit_nirdm(market, target_sigma, returns, shocks, states, net, r0=0.0,
              rho_grid=RHO_GRID, theta2_grid=THETA2_GRID, refine=True):
    """Profile fit of the network-integrated volatility equation for one
    market (k=7).

    Works like the institutional fit with two extra regressors built from
    the supplied foreign-state series and networks; the own-market state is
    re-profiled over (rho, theta2) with theta1 normalized to 1.
    """
    if not np.array_equal(target_sigma.dates, net.dates):
        raise InputError("target sigma must be on the network dates")
    if not np.array_equal(returns.dates, target_sigma.dates):
        raise InputError("returns dates do not match the target sigma dates")
    for name, s in (("deltaP", shocks.deltaP), ("deltaI", shocks.deltaI),
                    ("crisis_memory", shocks.crisis_memory)):
        if not np.array_equal(s.dates, target_sigma.dates):
            raise InputError(f"{name} dates do not match the target sigma dates")

    net_c, net_i = spillover_terms(states, net, market)
    dates, y, base_cols = variance_columns(target_sigma, returns)
    c_col = ("crisis", shocks.crisis_memory.values[1:])
    netc_col = ("net_c", net_c.restrict(dates).values)
    neti_col = ("net_i", net_i.restrict(dates).values)

    has_policy = shocks.deltaP.values.any()
    dp = shocks.deltaP.values
    di = shocks.deltaI.values

    def state_for(rho, theta2):
        forcing = dp + theta2 * di if has_policy else di.copy()
        return arx_filter(np.ascontiguousarray(forcing), rho, r0)

    def fit_at(rho, theta2):
        state = state_for(rho, theta2)
        return variance_equation(
            dates, y,
            base_cols + [c_col, ("state", state[1:]), netc_col, neti_col], k=7)

    best = None
    t2_values = theta2_grid if has_policy else (1.0,)
    for rho in rho_grid:
        for t2 in t2_values:
            sse = fit_at(rho, t2).sse
            if best is None or sse < best[0]:
                best = (sse, rho, t2)
    _, rho_w, t2_w = best

    if refine and has_policy:
        rho_step = rho_grid[1] - rho_grid[0] if len(rho_grid) > 1 else 0.01
        t2_step = theta2_grid[1] - theta2_grid[0] if len(theta2_grid) > 1 else 0.1
        problem = opt.BoxedProblem(
            objective=lambda th: fit_at(th[0], th[1]).sse,
            lower=np.array([max(rho_w - rho_step, -0.995), max(t2_w - t2_step, 0.0)]),
            upper=np.array([min(rho_w + rho_step, 0.995), t2_w + t2_step]),
        )
        start = np.array([rho_w, max(t2_w, 1e-6)])
        if start[1] <= problem.lower[1]:
            start[1] = problem.lower[1] + 1e-6
        res = opt.minimize(problem, start,
                           opt.Settings(ftol=1e-10, xtol=1e-8, max_evals=500))
        if res.fun <= best[0]:
            rho_w, t2_w = float(res.x[0]), float(res.x[1])

    theta1 = 1.0 if has_policy else 0.0
    reg = fit_at(rho_w, t2_w)
    state = state_for(rho_w, t2_w)
    return NirdmFit(
        state=IrdmStateParams(rho=rho_w, theta1=theta1, theta2=t2_w),
        b0=reg.coef["const"], b1=reg.coef["sigma_lag"], b2=reg.coef["r2_lag"],
        psi=reg.coef["crisis"], gamma1=reg.coef["state"],
        gamma2=reg.coef["net_c"], gamma3=reg.coef["net_i"],
        fitted_sigma=reg.fitted, rmse=reg.rmse, sse=reg.sse,
        aic_approx=reg.aic_approx,
        state_series=DatedSeries(target_sigma.dates, state),
        net_c=net_c, net_i=net_i, n=reg.n, dropped=reg.dropped, regression=reg,
    )


def placebo_regression(targets, returns, shocks, states, variants):
    """Pooled regression of the target on the IRDM controls plus the
    correlation-network spillover, one row per network variant.

    Reports the spillover coefficient with heteroskedasticity-robust
    (HC1) standard errors. Requires the real network among the variants.
    """
    variants = list(variants)
    if len(variants) < 2:
        raise InputError("need at least 2 network variants")
    if not any(v.variant == "real" for v in variants):
        raise InputError("variants must include the real network")

    rows = []
    for net in variants:
        ys, xs = [], []
        for market in net.markets:
            target = targets[market].restrict(net.dates)
            r = returns[market].restrict(net.dates)
            sh = shocks[market]
            crisis = sh.crisis_memory.restrict(net.dates)
            state = states[market].restrict(net.dates)
            net_c, _ = spillover_terms(states, net, market)
            sample = net.dates[1:]
            y = target.values[1:]
            X = np.column_stack([
                np.ones(len(y)),
                target.values[:-1],
                r.values[:-1] ** 2,
                crisis.values[1:],
                state.values[1:],
                net_c.restrict(sample).values,
            ])
            ys.append(y)
            xs.append(X)
        y = np.concatenate(ys)
        X = np.vstack(xs)
        n, k = X.shape
        beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ beta
        xtx_inv = np.linalg.inv(X.T @ X)
        meat = (X * (resid ** 2)[:, None]).T @ X
        cov = xtx_inv @ meat @ xtx_inv * (n / (n - k))
        est = float(beta[-1])
        se = float(np.sqrt(cov[-1, -1]))
        stat = est / se if se > 0 else 0.0
        rows.append({
            "term": "netR_C",
            "estimate": est,
            "std_error": se,
            "statistic": float(stat),
            "p_value": float(2.0 * norm.sf(abs(stat))),
            "model": VARIANT_LABELS.get(net.variant, net.variant),
        })
    return rows
