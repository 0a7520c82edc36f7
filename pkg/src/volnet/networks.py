"""Cross-market networks: DCC conditional correlations, the row-normalized
correlation network, the static governance-similarity network, and the
perturbed variants used for placebo analysis."""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from volnet import optimizer as opt
from volnet.errors import FitError, InputError
from volnet.kernels import dcc_filter

REAL = "real"
PLACEBO_PERMUTED = "placebo_permuted"
PLACEBO_SHIFTED = "placebo_shifted"
LAG1 = "lag1"
SPARSIFIED = "sparsified"

SPARSITY_THRESHOLDS = (0.05, 0.10)


@dataclass(frozen=True)
class DccParams:
    a: float
    b: float
    qbar: np.ndarray

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.a + self.b >= 1.0:
            raise InputError("DCC requires a, b >= 0 and a + b < 1")
        q = np.asarray(self.qbar, dtype=np.float64)
        if not np.allclose(q, q.T, atol=1e-10):
            raise InputError("Qbar must be symmetric")
        if not np.allclose(np.diagonal(q), 1.0, atol=1e-8):
            raise InputError("Qbar must have a unit diagonal")
        object.__setattr__(self, "qbar", q)


@dataclass(frozen=True)
class NetworkSequence:
    """Per-date correlation weights W^C plus one static similarity matrix W^I."""

    dates: np.ndarray
    markets: tuple
    wc: np.ndarray  # (T, n, n), zero diagonal, rows sum to 1 (or 0 if degenerate)
    wi: np.ndarray  # (n, n) static similarity, zero diagonal
    rho: np.ndarray = None  # (T, n, n) correlations behind wc, if available
    variant: str = REAL
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, "markets", tuple(self.markets))
        object.__setattr__(self, "dates", np.asarray(self.dates, dtype="datetime64[ns]"))
        n = len(self.markets)
        if self.wc.shape != (len(self.dates), n, n):
            raise InputError("wc shape must be (T, n_markets, n_markets)")
        if self.wi.shape != (n, n):
            raise InputError("wi shape must be (n_markets, n_markets)")

    def market_index(self, market):
        try:
            return self.markets.index(market)
        except ValueError:
            raise InputError(f"market {market!r} not in network") from None


def _corr_qll(z, a, b, qbar):
    _, qll, ok = dcc_filter(np.ascontiguousarray(z), a, b, np.ascontiguousarray(qbar))
    return qll if ok else -np.inf


def _nearest_correlation(q):
    """Clip eigenvalues at 1e-8 and renormalize to a correlation matrix."""
    vals, vecs = np.linalg.eigh(q)
    vals = np.maximum(vals, 1e-8)
    q = (vecs * vals) @ vecs.T
    d = np.sqrt(np.diagonal(q))
    return q / np.outer(d, d)


def fit_dcc(z_panel, markets=None, settings=None):
    """Two-stage DCC quasi-MLE on a (T, n) panel of standardized residuals.

    Qbar is the sample correlation of z; (a, b) maximize the Gaussian
    correlation quasi-likelihood on the a+b < 1 simplex. Returns
    (DccParams, rho sequence (T, n, n)).
    """
    z = np.asarray(z_panel, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] < 2:
        raise InputError("z panel must be (T, n) with n >= 2")
    qbar = np.corrcoef(z.T)
    if np.linalg.eigvalsh(qbar).min() < 1e-10:
        warnings.warn("sample correlation of z is numerically non-PSD; clipping eigenvalues")
        qbar = _nearest_correlation(qbar)

    # a+b capped just below 1: the correlation likelihood is flat in b when
    # a ~ 0, so an exact-boundary cap keeps saturated floats stationary
    problem = opt.BoxedProblem(
        objective=lambda th: -_corr_qll(z, th[0], th[1], qbar),
        lower=np.array([0.0, 0.0]),
        upper=np.array([1.0, 1.0]),
        simplex_groups=(opt.SimplexGroup(indices=(0, 1), coeffs=(1.0, 1.0),
                                         bound=1.0 - 1e-6),),
    )
    starts = [np.array([0.05, 0.90]), np.array([0.02, 0.95]), np.array([0.10, 0.80])]
    res = opt.multi_start(problem, starts, settings or opt.Settings(max_evals=2000))
    if not res.converged:
        raise FitError("DCC correlation likelihood did not converge",
                       best={"a": res.x[0], "b": res.x[1]})
    a, b = float(res.x[0]), float(res.x[1])
    rho, _, ok = dcc_filter(np.ascontiguousarray(z), a, b, np.ascontiguousarray(qbar))
    if not ok:
        raise FitError("DCC recursion failed at the optimum")
    if markets is not None and len(markets) != z.shape[1]:
        raise InputError("markets length does not match panel width")
    return DccParams(a=a, b=b, qbar=qbar), rho


def rho_to_weights(rho):
    """Row-normalized absolute correlations with a zero diagonal.

    Rows whose off-diagonal correlations are all (numerically) zero come
    out as zero rows rather than NaN.
    """
    rho = np.asarray(rho, dtype=np.float64)
    absr = np.abs(rho).copy()
    idx = np.arange(rho.shape[-1])
    absr[..., idx, idx] = 0.0
    denom = absr.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(denom > 1e-15, absr / np.where(denom == 0, 1.0, denom), 0.0)
    return w


def correlation_network(rho_seq, dates, markets, wi=None):
    """NetworkSequence from a (T, n, n) correlation sequence."""
    rho_seq = np.asarray(rho_seq, dtype=np.float64)
    n = rho_seq.shape[-1]
    if wi is None:
        wi = np.zeros((n, n))
    return NetworkSequence(dates=dates, markets=markets,
                           wc=rho_to_weights(rho_seq), wi=np.asarray(wi, dtype=np.float64),
                           rho=rho_seq, variant=REAL)


def similarity_network(governance):
    """Static similarity 1/(1 + ||g_i - g_j||) with a zero diagonal.

    governance: mapping market -> equal-length vector of governance scores.
    Returns (markets tuple, (n, n) matrix).
    """
    markets = tuple(sorted(governance))
    vecs = [np.asarray(governance[m], dtype=np.float64) for m in markets]
    lengths = {v.shape for v in vecs}
    if len(lengths) != 1 or vecs[0].ndim != 1:
        raise InputError("governance vectors must be 1-d and equal length")
    n = len(markets)
    wi = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = float(np.linalg.norm(vecs[i] - vecs[j]))
            wi[i, j] = 1.0 / (1.0 + d)
    return markets, wi


def perturb_network(net, mode, threshold=0.05, seed=0):
    """Perturbed variants of the correlation network.

    permute: one seeded random permutation per row of the off-diagonal
    columns, held fixed across dates. shift5: W_t <- W_{t-5} with the first
    five dates dropped. lag1: tag only; spillover terms then use W_{t-1}
    and the lagged foreign states. sparsify: zero |rho| < threshold before
    row normalization.
    """
    n = len(net.markets)
    if mode == "permute":
        rng = np.random.default_rng(seed)
        wc = net.wc.copy()
        rho = None if net.rho is None else net.rho.copy()
        for i in range(n):
            others = np.array([j for j in range(n) if j != i])
            perm = rng.permutation(others)
            wc[:, i, others] = wc[:, i, perm]
            if rho is not None:
                rho[:, i, others] = rho[:, i, perm]
        return replace(net, wc=wc, rho=rho, variant=PLACEBO_PERMUTED, seed=seed)
    if mode == "shift5":
        if len(net.dates) <= 5:
            raise InputError("need more than 5 dates to shift")
        rho = None if net.rho is None else net.rho[:-5]
        return replace(net, dates=net.dates[5:], wc=net.wc[:-5], rho=rho,
                       variant=PLACEBO_SHIFTED)
    if mode == "lag1":
        return replace(net, variant=LAG1)
    if mode == "sparsify":
        if net.rho is None:
            raise InputError("sparsify needs the underlying correlations")
        if threshold < 0 or threshold >= 1:
            raise InputError("sparsify threshold must be in [0, 1)")
        rho = np.where(np.abs(net.rho) < threshold, 0.0, net.rho)
        return replace(net, wc=rho_to_weights(rho), rho=rho, variant=SPARSIFIED)
    raise InputError(f"unknown perturbation mode {mode!r}")
