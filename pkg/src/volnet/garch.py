"""Asymmetric GARCH(1,1) estimation by maximum likelihood.

Two variance families with Student-t or GED innovations:

* exponential (log-variance):
  ln s2[t] = omega + alpha*|z[t-1]| + gamma*z[t-1] + beta*ln s2[t-1]

  Note the convention: alpha multiplies the magnitude term and gamma the
  signed term. Software that puts the sign coefficient first will report
  the two with swapped labels.

* threshold (GJR):
  s2[t] = omega + (alpha + gamma*1[eps[t-1]<0])*eps[t-1]^2 + beta*s2[t-1]

Both recursions start from the sample variance of the residuals and include
the first observation's density in the likelihood.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from volnet import dists, kernels
from volnet import optimizer as opt
from volnet.errors import FitError, InputError, NumericError
from volnet.timeseries import DatedSeries

EGARCH = "egarch"
GJR = "gjr"
FAMILIES = (EGARCH, GJR)

ZERO_MEAN = "zero"
CONSTANT_MEAN = "constant"


@dataclass(frozen=True)
class GarchSpec:
    family: str = EGARCH
    distribution: str = dists.STUDENT_T
    mean: str = ZERO_MEAN

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"family must be one of {FAMILIES}")
        if self.distribution not in dists.DISTRIBUTIONS:
            raise InputError(f"distribution must be one of {dists.DISTRIBUTIONS}")
        if self.mean not in (ZERO_MEAN, CONSTANT_MEAN):
            raise InputError("mean must be 'zero' or 'constant'")

    @property
    def n_params(self):
        return 5 if self.mean == ZERO_MEAN else 6


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float
    gamma: float
    shape: float
    mu: float = 0.0

    def validate(self, spec):
        dists._check_shape(spec.distribution, self.shape)
        if spec.family == EGARCH:
            if abs(self.beta) >= 1.0:
                raise InputError(f"egarch requires |beta| < 1, got {self.beta}")
        else:
            if self.omega <= 0.0:
                raise InputError("gjr requires omega > 0")
            if self.alpha < 0.0 or self.beta < 0.0 or self.alpha + self.gamma < 0.0:
                raise InputError("gjr requires alpha >= 0, beta >= 0, alpha+gamma >= 0")
            if persistence(spec.family, self) >= 1.0:
                raise InputError("gjr persistence must be < 1")


def persistence(family, params):
    """Volatility-shock decay rate: beta (exponential family) or
    alpha + beta + gamma/2 (threshold family, symmetric innovations)."""
    if family == EGARCH:
        return params.beta
    return params.alpha + params.beta + params.gamma / 2.0


@dataclass(frozen=True)
class LjungBoxResult:
    stat: float
    pvalue: float


@dataclass(frozen=True)
class DiagnosticsReport:
    lags: int
    lb_z: LjungBoxResult
    lb_z2: LjungBoxResult
    arch_lm: LjungBoxResult


@dataclass(frozen=True)
class GarchFit:
    spec: GarchSpec
    params: GarchParams
    sigma: DatedSeries
    z: DatedSeries
    loglik: float
    aic_norm: float
    persistence: float
    diagnostics: DiagnosticsReport
    n: int
    converged: bool


def _sigma2_path(eps, spec, params):
    """Variance path for either family; raises NumericError on overflow."""
    var0 = float(np.var(eps))
    if var0 <= 0.0:
        raise InputError("residuals have zero variance")
    if spec.family == EGARCH:
        s2, ok = kernels.egarch_sigma2(
            np.ascontiguousarray(eps), params.omega, params.alpha,
            params.gamma, params.beta, float(np.log(var0)))
    else:
        s2, ok = kernels.gjr_sigma2(
            np.ascontiguousarray(eps), params.omega, params.alpha,
            params.gamma, params.beta, var0)
    if not ok:
        raise NumericError("variance recursion left the representable range")
    return s2


def _filter(returns, params, spec):
    if len(returns) == 0:
        raise InputError("returns series is empty")
    params.validate(spec)
    eps = returns.values - params.mu
    s2 = _sigma2_path(eps, spec, params)
    sigma = np.sqrt(s2)
    z = eps / sigma
    ll = float(np.sum(dists.logpdf(z, spec.distribution, params.shape) - np.log(sigma)))
    if not np.isfinite(ll):
        raise NumericError("non-finite log-likelihood")
    return DatedSeries(returns.dates, sigma), ll


def egarch_filter(returns, params, distribution=dists.STUDENT_T):
    """Conditional sigma path and log-likelihood under the exponential family."""
    return _filter(returns, params, GarchSpec(EGARCH, distribution))


def gjr_filter(returns, params, distribution=dists.STUDENT_T):
    """Conditional sigma path and log-likelihood under the threshold family."""
    return _filter(returns, params, GarchSpec(GJR, distribution))


# Fixed default starts per family (omega, alpha, gamma, beta) plus four
# perturbed restarts; shape start appended per distribution below.
_EGARCH_STARTS = (
    (0.0, 0.05, 0.1, 0.9),
    (0.0, 0.15, -0.05, 0.95),
    (0.0, 0.2, 0.1, 0.7),
    (-0.1, 0.1, 0.0, 0.8),
    (0.1, 0.05, 0.2, 0.85),
)
_GJR_STARTS = (  # (omega_factor_of_var, alpha, beta, gamma)
    (0.05, 0.05, 0.85, 0.05),
    (0.02, 0.03, 0.90, 0.08),
    (0.10, 0.10, 0.70, 0.10),
    (0.05, 0.05, 0.80, 0.15),
    (0.03, 0.08, 0.88, 0.02),
)
_SHAPE_STARTS = {dists.STUDENT_T: (8.0, 6.0, 10.0, 5.0, 8.0),
                 dists.GED: (1.5, 1.3, 1.8, 1.2, 1.5)}
_SHAPE_BOUNDS = {dists.STUDENT_T: (2.05, 200.0), dists.GED: (0.1, 50.0)}


def _vector_to_params(theta, spec):
    mu = theta[5] if spec.mean == CONSTANT_MEAN else 0.0
    if spec.family == EGARCH:
        omega, alpha, gamma, beta, shape = theta[:5]
    else:
        omega, a1, a2, a3, shape = theta[:5]
        alpha, beta, gamma = a1, a2, a3 - a1
    return GarchParams(omega=float(omega), alpha=float(alpha), beta=float(beta),
                       gamma=float(gamma), shape=float(shape), mu=float(mu))


def _problem_and_starts(returns, spec):
    var = float(np.var(returns.values))
    shp_lo, shp_hi = _SHAPE_BOUNDS[spec.distribution]
    shapes = _SHAPE_STARTS[spec.distribution]
    inf = np.inf
    if spec.family == EGARCH:
        lower = [-inf, -inf, -inf, -0.999, shp_lo]
        upper = [inf, inf, inf, 0.999, shp_hi]
        groups = ()
        starts = [np.array([w, a, g, b, s])
                  for (w, a, g, b), s in zip(_EGARCH_STARTS, shapes)]
    else:
        # coordinates: omega, a1=alpha, a2=beta, a3=alpha+gamma, shape;
        # a1/2 + a2 + a3/2 = persistence < 1 via a simplex group
        lower = [0.0, 0.0, 0.0, 0.0, shp_lo]
        upper = [inf, 1.0, 1.0, 1.0, shp_hi]
        groups = (opt.SimplexGroup(indices=(1, 2, 3), coeffs=(0.5, 1.0, 0.5), bound=1.0),)
        starts = [np.array([wf * var, a, b, a + g, s])
                  for (wf, a, b, g), s in zip(_GJR_STARTS, shapes)]
    if spec.mean == CONSTANT_MEAN:
        lower.append(-inf)
        upper.append(inf)
        mu0 = float(np.mean(returns.values))
        starts = [np.append(s, mu0) for s in starts]

    def objective(theta):
        # InputError guards float saturation of the transform at extreme
        # search points (e.g. persistence rounding to exactly 1)
        try:
            _, ll = _filter(returns, _vector_to_params(theta, spec), spec)
        except (NumericError, InputError):
            return np.inf
        return -ll

    problem = opt.BoxedProblem(objective=objective, lower=np.array(lower),
                               upper=np.array(upper), simplex_groups=groups)
    return problem, starts


def fit_garch(returns, spec, settings=None):
    """Maximum-likelihood fit; multi-start Nelder-Mead with BFGS polish."""
    n = len(returns)
    if n < 250:
        raise InputError(f"need at least 250 observations, got {n}")
    if n < 1000:
        warnings.warn(f"only {n} observations; GARCH estimates may be unstable")
    problem, starts = _problem_and_starts(returns, spec)
    result = opt.multi_start(problem, starts, settings)
    params = _vector_to_params(result.x, spec)
    sigma, ll = _filter(returns, params, spec)
    if not result.converged:
        raise FitError("maximum-likelihood search did not converge",
                       best={"params": params, "loglik": ll})
    z = DatedSeries(returns.dates, (returns.values - params.mu) / sigma.values)
    k = spec.n_params
    fit = GarchFit(
        spec=spec, params=params, sigma=sigma, z=z, loglik=ll,
        aic_norm=(-2.0 * ll + 2.0 * k) / n,
        persistence=persistence(spec.family, params),
        diagnostics=_diagnostics_for_z(z.values, 10),
        n=n, converged=result.converged,
    )
    return fit


def ljung_box(x, lags):
    """Ljung-Box Q statistic with a chi-square(lags) p-value."""
    x = np.asarray(x, dtype=np.float64)
    T = len(x)
    if lags < 1:
        raise InputError("lags must be >= 1")
    if lags >= T:
        raise InputError(f"lags {lags} must be below sample size {T}")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom <= 0.0:
        raise InputError("zero-variance input; Q undefined")
    acf = np.array([float(xc[k:] @ xc[:-k]) / denom for k in range(1, lags + 1)])
    q = T * (T + 2.0) * np.sum(acf ** 2 / (T - np.arange(1, lags + 1)))
    return LjungBoxResult(stat=float(q), pvalue=float(chi2.sf(q, lags)))


def arch_lm(z, lags):
    """Engle's LM test: T*R^2 from regressing z^2 on its own lags."""
    z = np.asarray(z, dtype=np.float64)
    T = len(z)
    if lags < 1:
        raise InputError("lags must be >= 1")
    if lags >= T:
        raise InputError(f"lags {lags} must be below sample size {T}")
    y = z * z
    if np.var(y) <= 0.0:
        raise InputError("zero-variance input; LM statistic undefined")
    rows = T - lags
    X = np.empty((rows, lags + 1))
    X[:, 0] = 1.0
    for j in range(1, lags + 1):
        X[:, j] = y[lags - j:T - j]
    yy = y[lags:]
    beta, _, _, _ = np.linalg.lstsq(X, yy, rcond=None)
    resid = yy - X @ beta
    sst = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / sst
    stat = rows * r2
    return LjungBoxResult(stat=float(stat), pvalue=float(chi2.sf(stat, lags)))


def _diagnostics_for_z(z, lags):
    return DiagnosticsReport(
        lags=lags,
        lb_z=ljung_box(z, lags),
        lb_z2=ljung_box(z * z, lags),
        arch_lm=arch_lm(z, lags),
    )


def diagnostics(fit, lags=10):
    """Recompute residual diagnostics at a chosen lag order."""
    return _diagnostics_for_z(fit.z.values, lags)
