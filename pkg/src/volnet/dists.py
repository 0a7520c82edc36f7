"""Standardized (unit-variance) innovation distributions.

Both densities are parameterized so the variance is 1 for every admissible
shape value, which keeps conditional sigma paths comparable across shapes.
"""

import numpy as np
from scipy.special import gammaln

from volnet.errors import InputError

STUDENT_T = "student_t"
GED = "ged"
DISTRIBUTIONS = (STUDENT_T, GED)

# minimum admissible shape: df > 2 for Student-t (finite variance), > 0 for GED
MIN_T_DF = 2.0 + 1e-6


def _check_shape(dist, shape):
    if dist == STUDENT_T:
        if shape <= 2.0:
            raise InputError(f"Student-t df must exceed 2, got {shape}")
    elif dist == GED:
        if shape <= 0.0:
            raise InputError(f"GED shape must be positive, got {shape}")
    else:
        raise InputError(f"unknown distribution {dist!r}")


def logpdf(z, dist, shape):
    """Log density of the standardized innovation at z (vectorized)."""
    _check_shape(dist, shape)
    z = np.asarray(z, dtype=np.float64)
    if dist == STUDENT_T:
        nu = shape
        c = (gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0)
             - 0.5 * np.log(np.pi * (nu - 2.0)))
        return c - (nu + 1.0) / 2.0 * np.log1p(z * z / (nu - 2.0))
    kappa = shape
    lam = np.sqrt(2.0 ** (-2.0 / kappa) * np.exp(gammaln(1.0 / kappa) - gammaln(3.0 / kappa)))
    c = (np.log(kappa) - np.log(lam) - (1.0 + 1.0 / kappa) * np.log(2.0)
         - gammaln(1.0 / kappa))
    return c - 0.5 * np.abs(z / lam) ** kappa


def rvs(dist, shape, size, rng):
    """Draw standardized innovations (unit variance)."""
    _check_shape(dist, shape)
    if dist == STUDENT_T:
        nu = shape
        t = rng.standard_t(nu, size=size)
        return t * np.sqrt((nu - 2.0) / nu)
    kappa = shape
    lam = np.sqrt(2.0 ** (-2.0 / kappa) * np.exp(gammaln(1.0 / kappa) - gammaln(3.0 / kappa)))
    # |X/lam|^kappa / 2 ~ Gamma(1/kappa, 1)
    g = rng.gamma(1.0 / kappa, 1.0, size=size)
    sign = rng.integers(0, 2, size=size) * 2 - 1
    return sign * lam * (2.0 * g) ** (1.0 / kappa)


def multivariate_t_rvs(corr, df, size, rng):
    """Correlated standardized Student-t draws: each margin has variance 1
    and the Gaussian copula-free multivariate-t dependence given by corr."""
    if df <= 2.0:
        raise InputError(f"multivariate t needs df > 2, got {df}")
    n = corr.shape[0]
    chol = np.linalg.cholesky(corr)
    g = rng.standard_normal((size, n)) @ chol.T
    mix = rng.chisquare(df, size=size) / df
    return g / np.sqrt(mix)[:, None] * np.sqrt((df - 2.0) / df)
