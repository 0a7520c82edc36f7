"""Institutional-response dynamics: an ARX state driven by policy and
information shocks feeding a linear volatility equation.

Estimation is two-step, profiled: the state scale is normalized
(theta1 = 1), a (rho, theta2) grid picks the state by least squares on the
volatility equation, and a local refinement sharpens the winner.
"""

from dataclasses import dataclass

import numpy as np

from volnet import optimizer as opt
from volnet.errors import InputError
from volnet.kernels import arx_filter
from volnet.linreg import variance_equation
from volnet.timeseries import DatedSeries

RHO_GRID = tuple(np.round(np.arange(0.80, 0.995, 0.01), 2))
THETA2_GRID = tuple(np.round(np.arange(0.0, 2.05, 0.1), 1))


@dataclass(frozen=True)
class IrdmStateParams:
    rho: float
    theta1: float
    theta2: float

    def __post_init__(self):
        if abs(self.rho) >= 1.0:
            raise InputError(f"state persistence |rho| must be < 1, got {self.rho}")


@dataclass(frozen=True)
class IrdmFit:
    state: IrdmStateParams
    b0: float
    b1: float
    b2: float
    psi: float
    gamma1: float
    fitted_sigma: DatedSeries
    rmse: float
    sse: float
    aic_approx: float
    state_series: DatedSeries
    n: int
    dropped: tuple
    regression: object = None  # underlying RegressionFit


def state_filter(deltaP, deltaI, params, r0=0.0):
    """R[t] = rho*R[t-1] + theta1*dP[t] + theta2*dI[t], presample state r0."""
    if not np.array_equal(deltaP.dates, deltaI.dates):
        raise InputError("deltaP and deltaI must share dates")
    forcing = params.theta1 * deltaP.values + params.theta2 * deltaI.values
    return DatedSeries(deltaP.dates, arx_filter(np.ascontiguousarray(forcing),
                                                params.rho, r0))


def _check_aligned(target_sigma, returns, shocks):
    dates = target_sigma.dates
    for name, s in (("returns", returns), ("deltaP", shocks.deltaP),
                    ("deltaI", shocks.deltaI), ("crisis_memory", shocks.crisis_memory)):
        if not np.array_equal(s.dates, dates):
            raise InputError(f"{name} dates do not match the target sigma dates")


def variance_columns(target_sigma, returns):
    """Regression sample (dates t>=1) and the nested baseline columns."""
    sig = target_sigma.values
    r = returns.values
    dates = target_sigma.dates[1:]
    y = sig[1:]
    cols = [("const", np.ones(len(y))), ("sigma_lag", sig[:-1]), ("r2_lag", r[:-1] ** 2)]
    return dates, y, cols


def fit_variance_baseline(target_sigma, returns):
    """Nested baseline: OLS of sigma_t on [1, sigma_{t-1}, r^2_{t-1}] (k=3)."""
    if not np.array_equal(returns.dates, target_sigma.dates):
        raise InputError("returns dates do not match the target sigma dates")
    dates, y, cols = variance_columns(target_sigma, returns)
    return variance_equation(dates, y, cols, k=3)


def fit_irdm(target_sigma, returns, shocks, r0=0.0,
             rho_grid=RHO_GRID, theta2_grid=THETA2_GRID, refine=True):
    """Profile fit of the institutional-response volatility equation.

    The state scale is not identified jointly with its coefficient, so
    theta1 is normalized to 1 (theta2 = 1 instead when no policy events
    exist in the sample); (rho, theta2) minimize the equation SSE.
    """
    _check_aligned(target_sigma, returns, shocks)
    dates, y, base_cols = variance_columns(target_sigma, returns)
    c_col = ("crisis", shocks.crisis_memory.values[1:])

    has_policy = shocks.deltaP.values.any()
    dp = shocks.deltaP.values
    di = shocks.deltaI.values

    def state_for(rho, theta2):
        if has_policy:
            forcing = dp + theta2 * di
        else:
            forcing = di.copy()
        return arx_filter(np.ascontiguousarray(forcing), rho, r0)

    def sse_at(rho, theta2):
        state = state_for(rho, theta2)
        fit = variance_equation(dates, y, base_cols + [c_col, ("state", state[1:])], k=5)
        return fit.sse

    best = None
    t2_values = theta2_grid if has_policy else (1.0,)
    for rho in rho_grid:
        for t2 in t2_values:
            sse = sse_at(rho, t2)
            if best is None or sse < best[0]:
                best = (sse, rho, t2)
    _, rho_w, t2_w = best

    if refine and has_policy:
        rho_step = rho_grid[1] - rho_grid[0] if len(rho_grid) > 1 else 0.01
        t2_step = theta2_grid[1] - theta2_grid[0] if len(theta2_grid) > 1 else 0.1
        problem = opt.BoxedProblem(
            objective=lambda th: sse_at(th[0], th[1]),
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
    elif refine:
        rho_step = rho_grid[1] - rho_grid[0] if len(rho_grid) > 1 else 0.01
        problem = opt.BoxedProblem(
            objective=lambda th: sse_at(th[0], t2_w),
            lower=np.array([max(rho_w - rho_step, -0.995)]),
            upper=np.array([min(rho_w + rho_step, 0.995)]),
        )
        res = opt.minimize(problem, np.array([rho_w]),
                           opt.Settings(ftol=1e-10, xtol=1e-8, max_evals=300))
        if res.fun <= best[0]:
            rho_w = float(res.x[0])

    theta1 = 1.0 if has_policy else 0.0
    state_params = IrdmStateParams(rho=rho_w, theta1=theta1, theta2=t2_w)
    state = state_for(rho_w, t2_w)
    reg = variance_equation(dates, y, base_cols + [c_col, ("state", state[1:])], k=5)
    return IrdmFit(
        state=state_params,
        b0=reg.coef["const"], b1=reg.coef["sigma_lag"], b2=reg.coef["r2_lag"],
        psi=reg.coef["crisis"], gamma1=reg.coef["state"],
        fitted_sigma=reg.fitted, rmse=reg.rmse, sse=reg.sse,
        aic_approx=reg.aic_approx,
        state_series=DatedSeries(target_sigma.dates, state),
        n=reg.n, dropped=reg.dropped, regression=reg,
    )


def irdm_rmse(fit, target):
    """Root mean squared one-step in-sample error on the common sample."""
    fitted = fit.fitted_sigma
    common = np.intersect1d(fitted.dates, target.dates)
    if len(common) == 0:
        raise InputError("fit and target share no dates")
    e = fitted.restrict(common).values - target.restrict(common).values
    return float(np.sqrt(np.mean(e * e)))
