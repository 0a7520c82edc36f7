"""Pure-Python/numpy fallbacks for the compiled kernels in ``_core.pyx``.

Same signatures and semantics; used when the extension is unavailable or
when ``VOLNET_PURE_PYTHON=1`` is set.
"""

import math

import numpy as np
from scipy.signal import lfilter

_LNSIG2_CAP = 700.0
_SIG2_CAP = 1e300


def egarch_sigma2(eps, omega, alpha, gamma, beta, lnsig2_0):
    eps = np.asarray(eps, dtype=np.float64)
    T = eps.shape[0]
    out = np.empty(T, dtype=np.float64)
    lns2 = float(lnsig2_0)
    if abs(lns2) > _LNSIG2_CAP or not math.isfinite(lns2):
        return out, False
    out[0] = math.exp(lns2)
    e = eps.tolist()
    prev_s2 = out[0]
    for t in range(1, T):
        z = e[t - 1] / math.sqrt(prev_s2)
        lns2 = omega + alpha * abs(z) + gamma * z + beta * lns2
        if abs(lns2) > _LNSIG2_CAP or not math.isfinite(lns2):
            return out, False
        prev_s2 = math.exp(lns2)
        out[t] = prev_s2
    return out, True


def gjr_sigma2(eps, omega, alpha, gamma, beta, sig2_0):
    eps = np.asarray(eps, dtype=np.float64)
    T = eps.shape[0]
    out = np.empty(T, dtype=np.float64)
    if sig2_0 <= 0.0 or sig2_0 > _SIG2_CAP or not math.isfinite(sig2_0):
        return out, False
    out[0] = sig2_0
    if T > 1:
        # The recursion is linear in sigma2 given eps, so a direct-form IIR
        # filter reproduces it exactly.
        e = eps[:-1]
        forcing = omega + (alpha + gamma * (e < 0.0)) * e * e
        out[1:] = lfilter([1.0], [1.0, -beta], forcing, zi=[beta * sig2_0])[0]
    bad = ~np.isfinite(out) | (out <= 0.0) | (out > _SIG2_CAP)
    if bad.any():
        return out, False
    return out, True


def arx_filter(forcing, rho, r0):
    forcing = np.asarray(forcing, dtype=np.float64)
    return lfilter([1.0], [1.0, -rho], forcing, zi=[rho * r0])[0]


def dcc_filter(z, a, b, qbar):
    z = np.asarray(z, dtype=np.float64)
    qbar = np.asarray(qbar, dtype=np.float64)
    T, n = z.shape
    corr = np.empty((T, n, n), dtype=np.float64)
    qll = 0.0
    omega = 1.0 - a - b
    q = qbar.copy()
    for t in range(T):
        if t > 0:
            q = omega * qbar + a * np.outer(z[t - 1], z[t - 1]) + b * q
        diag = np.diagonal(q)
        if (diag <= 0.0).any() or not np.isfinite(diag).all():
            return corr, qll, False
        d = np.sqrt(diag)
        r = q / np.outer(d, d)
        corr[t] = r
        try:
            ell = np.linalg.cholesky(r)
        except np.linalg.LinAlgError:
            return corr, qll, False
        logdet = 2.0 * np.log(np.diagonal(ell)).sum()
        w = np.linalg.solve(ell, z[t])
        qll += -0.5 * (logdet + w @ w - z[t] @ z[t])
    return corr, qll, True
