"""Pooled panel interaction regression with country fixed effects,
cluster-robust (CR1) inference, and a wild-cluster-bootstrap robustness
column for the small-G setting."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from volnet.errors import InputError
from volnet.linreg import _collinear_names, ols

MIN_ROWS = 100


@dataclass(frozen=True)
class PanelRow:
    country: str
    date: object
    sigma: float
    deltaP: float
    deltaI: float
    L: float


@dataclass(frozen=True)
class PanelFit:
    names: tuple
    coef: np.ndarray
    se: np.ndarray
    tstat: np.ndarray
    pvalue: np.ndarray
    cov: np.ndarray
    n: int
    n_clusters: int
    countries: tuple
    design: np.ndarray
    y: np.ndarray
    clusters: np.ndarray

    def __getitem__(self, name):
        return float(self.coef[self.names.index(name)])

    def se_of(self, name):
        return float(self.se[self.names.index(name)])


def _design(rows):
    countries = sorted({r.country for r in rows})
    if len(countries) < 2:
        raise InputError("panel regression needs at least 2 countries")
    if len(rows) < MIN_ROWS:
        raise InputError(f"panel regression needs at least {MIN_ROWS} rows")
    ref = countries[0]  # alphabetically first country is the reference level
    names = ["intercept", "deltaP", "deltaI", "L"]
    names += [f"fe_{c}" for c in countries[1:]]
    names += ["deltaP:L", "deltaI:L"]
    n = len(rows)
    X = np.zeros((n, len(names)))
    y = np.empty(n)
    clusters = np.empty(n, dtype=int)
    cidx = {c: i for i, c in enumerate(countries)}
    for i, r in enumerate(rows):
        X[i, 0] = 1.0
        X[i, 1] = r.deltaP
        X[i, 2] = r.deltaI
        X[i, 3] = r.L
        if r.country != ref:
            X[i, 3 + cidx[r.country]] = 1.0
        X[i, -2] = r.deltaP * r.L
        X[i, -1] = r.deltaI * r.L
        y[i] = r.sigma
        clusters[i] = cidx[r.country]
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise InputError("panel rows contain non-finite values")
    return tuple(names), X, y, clusters, tuple(countries)


def _cluster_cov(X, resid, clusters, n_clusters):
    """CR1 sandwich: G/(G-1) * (n-1)/(n-k) * bread * meat * bread."""
    n, k = X.shape
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((k, k))
    for g in range(n_clusters):
        sel = clusters == g
        score = X[sel].T @ resid[sel]
        meat += np.outer(score, score)
    factor = (n_clusters / (n_clusters - 1.0)) * ((n - 1.0) / (n - k))
    return factor * bread @ meat @ bread


def fit_panel(rows):
    """OLS of sigma on [1, dP, dI, L, country dummies, dP*L, dI*L] with
    country-clustered CR1 standard errors and two-sided normal p-values."""
    names, X, y, clusters, countries = _design(rows)
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise InputError(
            f"rank-deficient design; collinear columns: {_collinear_names(X, list(names))}")
    beta, _, resid, _ = ols(y, X)
    cov = _cluster_cov(X, resid, clusters, len(countries))
    se = np.sqrt(np.diagonal(cov))
    tstat = beta / se
    pvalue = 2.0 * norm.sf(np.abs(tstat))
    return PanelFit(names=names, coef=beta, se=se, tstat=tstat, pvalue=pvalue,
                    cov=cov, n=len(y), n_clusters=len(countries),
                    countries=countries, design=X, y=y, clusters=clusters)


def wild_cluster_bootstrap(fit, n_draws=999, seed=0):
    """Bootstrap-t p-values with Rademacher cluster weights.

    Resamples y* = X beta + w_g * u and compares |t*| against the original
    cluster-robust t statistic, coefficient by coefficient.
    """
    rng = np.random.default_rng(seed)
    X, resid, clusters = fit.design, fit.y - fit.design @ fit.coef, fit.clusters
    G = fit.n_clusters
    base_fit = fit.design @ fit.coef
    exceed = np.zeros(len(fit.names))
    for _ in range(n_draws):
        w = rng.integers(0, 2, size=G) * 2.0 - 1.0
        y_star = base_fit + w[clusters] * resid
        beta_s, _, resid_s, _ = ols(y_star, X)
        cov_s = _cluster_cov(X, resid_s, clusters, G)
        t_s = (beta_s - fit.coef) / np.sqrt(np.diagonal(cov_s))
        exceed += np.abs(t_s) >= np.abs(fit.tstat)
    return (exceed + 1.0) / (n_draws + 1.0)


def marginal_effect_policy(fit, l_grid):
    """Marginal effect of a policy shock across the learning index:
    effect(L) = b_dP + b_dPxL * L with delta-method standard errors."""
    for needed in ("deltaP", "deltaP:L"):
        if needed not in fit.names:
            raise InputError(f"fit lacks the {needed} coefficient")
    i = fit.names.index("deltaP")
    j = fit.names.index("deltaP:L")
    l_grid = np.asarray(l_grid, dtype=np.float64)
    effect = fit.coef[i] + fit.coef[j] * l_grid
    var = fit.cov[i, i] + l_grid ** 2 * fit.cov[j, j] + 2.0 * l_grid * fit.cov[i, j]
    se = np.sqrt(np.maximum(var, 0.0))
    return {"L": l_grid, "effect": effect, "se": se,
            "lo": effect - 1.96 * se, "hi": effect + 1.96 * se}
