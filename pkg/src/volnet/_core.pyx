# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled recursion kernels (exponential/threshold GARCH filters, DCC
correlation filter, ARX state filter).

Pure-Python equivalents live in ``_core_py``; ``volnet.kernels`` picks
whichever is available at import time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, log, sqrt

cnp.import_array()

DEF LNSIG2_CAP = 700.0
DEF SIG2_CAP = 1e300


def egarch_sigma2(double[::1] eps, double omega, double alpha, double gamma,
                  double beta, double lnsig2_0):
    """Exponential-GARCH variance recursion.

    ln s2[t] = omega + alpha*|z[t-1]| + gamma*z[t-1] + beta*ln s2[t-1],
    z = eps/s.  Returns (sigma2 array, ok flag); ok is False when the
    log-variance leaves [-700, 700] (caller treats the path as invalid).
    """
    cdef Py_ssize_t T = eps.shape[0]
    out = np.empty(T, dtype=np.float64)
    cdef double[::1] s2 = out
    cdef double lns2 = lnsig2_0
    cdef double s, z
    cdef Py_ssize_t t
    if fabs(lns2) > LNSIG2_CAP or not isfinite(lns2):
        return out, False
    s2[0] = exp(lns2)
    for t in range(1, T):
        s = sqrt(s2[t - 1])
        z = eps[t - 1] / s
        lns2 = omega + alpha * fabs(z) + gamma * z + beta * lns2
        if fabs(lns2) > LNSIG2_CAP or not isfinite(lns2):
            return out, False
        s2[t] = exp(lns2)
    return out, True


def gjr_sigma2(double[::1] eps, double omega, double alpha, double gamma,
               double beta, double sig2_0):
    """Threshold (GJR) GARCH variance recursion.

    s2[t] = omega + (alpha + gamma*1[eps[t-1] < 0])*eps[t-1]^2 + beta*s2[t-1].
    Returns (sigma2 array, ok flag); ok is False on overflow or a
    non-positive variance.
    """
    cdef Py_ssize_t T = eps.shape[0]
    out = np.empty(T, dtype=np.float64)
    cdef double[::1] s2 = out
    cdef double prev = sig2_0
    cdef double e, coef
    cdef Py_ssize_t t
    if prev <= 0.0 or prev > SIG2_CAP or not isfinite(prev):
        return out, False
    s2[0] = prev
    for t in range(1, T):
        e = eps[t - 1]
        coef = alpha + gamma if e < 0.0 else alpha
        prev = omega + coef * e * e + beta * prev
        if prev <= 0.0 or prev > SIG2_CAP or not isfinite(prev):
            return out, False
        s2[t] = prev
    return out, True


def arx_filter(double[::1] forcing, double rho, double r0):
    """First-order autoregressive filter: r[t] = rho*r[t-1] + forcing[t],
    with presample state r[-1] = r0."""
    cdef Py_ssize_t T = forcing.shape[0]
    out = np.empty(T, dtype=np.float64)
    cdef double[::1] r = out
    cdef double prev = r0
    cdef Py_ssize_t t
    for t in range(T):
        prev = rho * prev + forcing[t]
        r[t] = prev
    return out


cdef int _chol_lower(double[:, ::1] a, double[:, ::1] l, Py_ssize_t n) noexcept nogil:
    """In-place lower Cholesky of a into l; -1 if a is not positive definite."""
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(n):
        for j in range(i + 1):
            s = a[i, j]
            for k in range(j):
                s -= l[i, k] * l[j, k]
            if i == j:
                if s <= 0.0:
                    return -1
                l[i, i] = sqrt(s)
            else:
                l[i, j] = s / l[j, j]
    return 0


def dcc_filter(double[:, ::1] z, double a, double b, double[:, ::1] qbar):
    """DCC correlation recursion and Gaussian correlation quasi-log-likelihood.

    Q[t] = (1-a-b)*Qbar + a*z[t-1]z[t-1]' + b*Q[t-1] with Q[0] = Qbar;
    R[t] = normalize(Q[t]).  Returns (corr (T,n,n), qll, ok).
    qll = -0.5 * sum_t (log|R_t| + z_t' R_t^{-1} z_t - z_t' z_t).
    """
    cdef Py_ssize_t T = z.shape[0]
    cdef Py_ssize_t n = z.shape[1]
    corr_out = np.empty((T, n, n), dtype=np.float64)
    cdef double[:, :, ::1] corr = corr_out
    q_arr = np.empty((n, n), dtype=np.float64)
    r_arr = np.empty((n, n), dtype=np.float64)
    l_arr = np.zeros((n, n), dtype=np.float64)
    w_arr = np.empty(n, dtype=np.float64)
    d_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] q = q_arr
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] l = l_arr
    cdef double[::1] w = w_arr
    cdef double[::1] d = d_arr
    cdef double qll = 0.0
    cdef double omega = 1.0 - a - b
    cdef double logdet, quad, zz, s
    cdef Py_ssize_t t, i, j, k

    for i in range(n):
        for j in range(n):
            q[i, j] = qbar[i, j]

    for t in range(T):
        if t > 0:
            for i in range(n):
                for j in range(n):
                    q[i, j] = (omega * qbar[i, j]
                               + a * z[t - 1, i] * z[t - 1, j]
                               + b * q[i, j])
        for i in range(n):
            if q[i, i] <= 0.0 or not isfinite(q[i, i]):
                return corr_out, qll, False
            d[i] = sqrt(q[i, i])
        for i in range(n):
            for j in range(n):
                r[i, j] = q[i, j] / (d[i] * d[j])
        for i in range(n):
            for j in range(n):
                corr[t, i, j] = r[i, j]
        if _chol_lower(r, l, n) != 0:
            return corr_out, qll, False
        logdet = 0.0
        for i in range(n):
            logdet += 2.0 * log(l[i, i])
        # forward solve L w = z_t, quadratic form = w'w
        quad = 0.0
        zz = 0.0
        for i in range(n):
            s = z[t, i]
            for k in range(i):
                s -= l[i, k] * w[k]
            w[i] = s / l[i, i]
            quad += w[i] * w[i]
            zz += z[t, i] * z[t, i]
        qll += -0.5 * (logdet + quad - zz)
    return corr_out, qll, True
