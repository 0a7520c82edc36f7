"""Shared least-squares machinery for the variance-equation models.

The baseline, institutional, and network models all run through
`variance_equation` with different column sets, which makes the nesting
relationships (SSE ordering under column supersets) hold by construction.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from volnet.errors import InputError
from volnet.timeseries import DatedSeries

_ZERO_VAR = 1e-14


def aic_approx(n, sse, k):
    """Gaussian-approximation information criterion n*ln(SSE/n) + 2k."""
    if n <= 0 or sse <= 0:
        raise InputError("aic_approx needs n > 0 and SSE > 0")
    return float(n * np.log(sse / n) + 2.0 * k)


def ols(y, X):
    """Least squares via SVD; returns (beta, fitted, resid, sse)."""
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ beta
    resid = y - fitted
    return beta, fitted, resid, float(resid @ resid)


def _collinear_names(X, names):
    """Columns lying in the span of their predecessors."""
    bad = []
    for j in range(1, X.shape[1]):
        coef, _, _, _ = np.linalg.lstsq(X[:, :j], X[:, j], rcond=None)
        resid = X[:, j] - X[:, :j] @ coef
        scale = max(float(np.abs(X[:, j]).max()), 1.0)
        if np.abs(resid).max() < 1e-8 * scale:
            bad.append(names[j])
    return bad


@dataclass(frozen=True)
class RegressionFit:
    names: tuple
    coef: dict  # name -> estimate (dropped columns reported as 0.0)
    fitted: DatedSeries
    resid: np.ndarray
    sse: float
    rmse: float
    aic_approx: float
    n: int
    k: int
    dropped: tuple
    design: np.ndarray = None  # kept columns, for expanding-window re-fits
    y: np.ndarray = None


def variance_equation(dates, y, columns, k=None, drop_degenerate=True):
    """OLS of y on named columns (first column must be the intercept).

    Degenerate (zero-variance) non-intercept columns are dropped with a
    warning and their coefficients reported as 0; genuinely collinear
    designs raise an error naming the columns.
    """
    names = [c[0] for c in columns]
    if names[0] != "const":
        raise InputError("first column must be the intercept 'const'")
    dropped = []
    kept = [columns[0]]
    for name, vals in columns[1:]:
        if drop_degenerate and float(np.var(vals)) < _ZERO_VAR:
            dropped.append(name)
            warnings.warn(f"regressor {name!r} is constant; dropped (coefficient set to 0)")
        else:
            kept.append((name, vals))
    X = np.column_stack([v for _, v in kept])
    kept_names = [n for n, _ in kept]
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise InputError(f"rank-deficient design; collinear columns: {_collinear_names(X, kept_names)}")
    beta, fitted, resid, sse = ols(y, X)
    n = len(y)
    k_eff = len(names) if k is None else k
    coef = {name: 0.0 for name in names}
    coef.update({name: float(b) for name, b in zip(kept_names, beta)})
    return RegressionFit(
        names=tuple(names), coef=coef, fitted=DatedSeries(dates, fitted),
        resid=resid, sse=sse, rmse=float(np.sqrt(sse / n)),
        aic_approx=aic_approx(n, sse, k_eff), n=n, k=k_eff,
        dropped=tuple(dropped), design=X, y=np.asarray(y, dtype=np.float64),
    )
