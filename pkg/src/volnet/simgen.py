"""Synthetic multi-market panels from the full network-integrated DGP, so
every estimator in the package has a known-truth oracle.

Per market and day: draw policy/information shocks, advance the
institutional state (optionally with innovations), build the network
spillover terms, evaluate the volatility equation (floored below at
SIGMA_FLOOR), and draw the return as sigma times a heavy-tailed
standardized innovation. Innovations are correlated across markets through
a DCC recursion whose implied correlation path doubles as the true
correlation network. The first `burn_in` days are discarded.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from volnet import dists
from volnet.errors import GenerationError, InputError
from volnet.garch import EGARCH, FAMILIES, GarchParams
from volnet.irdm import IrdmStateParams
from volnet.kernels import arx_filter
from volnet.networks import NetworkSequence, rho_to_weights, similarity_network
from volnet.shocks import CrisisEvent, ShockSet, crisis_memory
from volnet.timeseries import PERCENT, DatedSeries, ReturnPanel

SIGMA_FLOOR = 1e-4
SIGMA_CAP = 1e6

FROM_DCC_TRUTH = "from_dcc_truth"
FIXED_MATRIX = "fixed_matrix"

# Table-scale threshold-GARCH truth used as the default returns process in
# the parameter-recovery scenarios.
DEFAULT_GARCH_TRUTH = GarchParams(omega=0.030, alpha=0.033, beta=0.879,
                                  gamma=0.117, shape=6.4)


def synthetic_governance(markets):
    """Deterministic synthetic governance vectors (demo inputs, not data)."""
    out = {}
    for i, m in enumerate(sorted(markets)):
        out[m] = np.linspace(0.0, 1.0, 6) + 0.3 * i
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    markets: tuple = ("IDN", "MYS", "PHL", "THA")
    t_obs: int = 2000
    burn_in: int = 250
    start_date: str = "2010-01-04"
    seed: int = 0
    # volatility-equation truth (shared across markets)
    b0: float = 0.080
    b1: float = 0.886
    b2: float = 0.019
    psi: float = 0.006
    gamma1: float = 0.010
    gamma2: float = 0.0
    gamma3: float = 0.0
    sigma_noise_sd: float = 0.02
    # institutional-state truth
    state: IrdmStateParams = field(default_factory=lambda: IrdmStateParams(0.90, 1.0, 0.5))
    state_innovation_sd: float = 0.0
    # shock arrival processes
    policy_prob: float = 0.02
    info_sd: float = 1.0
    common_factor_sd: float = 0.0
    common_factor_rho: float = 0.9
    # crisis events as (position in [0,1) of the kept sample, magnitude, label)
    crises: tuple = ((0.2, 1.0, "c1"), (0.6, 1.0, "c2"))
    lam: float = 0.02
    # cross-market innovation dependence / network truth
    network_mode: str = FROM_DCC_TRUTH
    dcc_a: float = 0.05
    dcc_b: float = 0.90
    base_corr: float = 0.5
    fixed_wc: object = None  # (n, n) row-normalized, zero diagonal
    innovation_df: float = 6.0
    garch: object = None  # market -> GarchParams (returns-process truth)

    def __post_init__(self):
        object.__setattr__(self, "markets", tuple(self.markets))
        object.__setattr__(self, "crises", tuple(self.crises))
        if self.t_obs < 500:
            raise InputError("scenario needs t_obs >= 500")
        if not 0.0 < self.b1 < 1.0:
            raise InputError("volatility persistence b1 must be in (0, 1)")
        if self.network_mode not in (FROM_DCC_TRUTH, FIXED_MATRIX):
            raise InputError(f"unknown network mode {self.network_mode!r}")
        if self.network_mode == FIXED_MATRIX and len(self.markets) > 1 and self.fixed_wc is None:
            n = len(self.markets)
            w = np.full((n, n), 1.0 / (n - 1))
            np.fill_diagonal(w, 0.0)
            object.__setattr__(self, "fixed_wc", w)
        if self.dcc_a < 0 or self.dcc_b < 0 or self.dcc_a + self.dcc_b >= 1:
            raise InputError("DCC truth requires a, b >= 0 and a + b < 1")
        if self.garch is None:
            object.__setattr__(self, "garch",
                               {m: DEFAULT_GARCH_TRUTH for m in self.markets})

    def to_dict(self):
        d = asdict(self)
        d["state"] = asdict(self.state)
        d["garch"] = {m: asdict(p) for m, p in self.garch.items()}
        if self.fixed_wc is not None:
            d["fixed_wc"] = np.asarray(self.fixed_wc).tolist()
        return d


@dataclass(frozen=True)
class SyntheticPanel:
    config: ScenarioConfig
    panel: ReturnPanel
    sigma: dict  # market -> true target-volatility path
    states: dict  # market -> true institutional state
    shocks: dict  # market -> ShockSet (rv unset; sigma itself is the target)
    network: NetworkSequence
    governance: dict
    floor_hits: int


def _market_rng(seed, idx):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(idx,)))


def _equicorrelation(n, rho):
    q = np.full((n, n), rho)
    np.fill_diagonal(q, 1.0)
    return q


def _draw_innovations(cfg, joint_rng, t_total):
    """Correlated standardized-t innovations plus the true correlation path."""
    n = len(cfg.markets)
    df = cfg.innovation_df
    scale = np.sqrt((df - 2.0) / df)
    if n == 1:
        z = dists.rvs(dists.STUDENT_T, df, (t_total, 1), joint_rng)
        return z, None
    qbar = _equicorrelation(n, cfg.base_corr)
    if cfg.network_mode == FIXED_MATRIX:
        z = dists.multivariate_t_rvs(qbar, df, t_total, joint_rng)
        return z, None
    a, b = cfg.dcc_a, cfg.dcc_b
    z = np.empty((t_total, n))
    rho = np.empty((t_total, n, n))
    q = qbar.copy()
    gauss = joint_rng.standard_normal((t_total, n))
    mix = joint_rng.chisquare(df, size=t_total) / df
    for t in range(t_total):
        if t > 0:
            q = (1 - a - b) * qbar + a * np.outer(z[t - 1], z[t - 1]) + b * q
        d = np.sqrt(np.diagonal(q))
        r = q / np.outer(d, d)
        rho[t] = r
        z[t] = (np.linalg.cholesky(r) @ gauss[t]) / np.sqrt(mix[t]) * scale
    return z, rho


def simulate(config):
    """Generate a SyntheticPanel; bit-identical under the same seed."""
    cfg = config
    n = len(cfg.markets)
    t_total = cfg.t_obs + cfg.burn_in
    full_dates = pd.bdate_range(cfg.start_date, periods=t_total).values
    out_dates = full_dates[cfg.burn_in:]

    rngs = [_market_rng(cfg.seed, i) for i in range(n)]
    joint = _market_rng(cfg.seed, 10_000)

    # exogenous shock processes
    dp = np.column_stack([(rngs[i].random(t_total) < cfg.policy_prob).astype(float)
                          for i in range(n)])
    if cfg.common_factor_sd > 0:
        innov = joint.normal(0.0, cfg.common_factor_sd * np.sqrt(1 - cfg.common_factor_rho ** 2),
                             t_total)
        factor = arx_filter(np.ascontiguousarray(innov), cfg.common_factor_rho, 0.0)
    else:
        factor = np.zeros(t_total)
    di = np.column_stack([factor + rngs[i].normal(0.0, cfg.info_sd, t_total)
                          for i in range(n)])

    # institutional states
    st = cfg.state
    states = np.empty((t_total, n))
    for i in range(n):
        forcing = st.theta1 * dp[:, i] + st.theta2 * di[:, i]
        if cfg.state_innovation_sd > 0:
            forcing = forcing + rngs[i].normal(0.0, cfg.state_innovation_sd, t_total)
        states[:, i] = arx_filter(np.ascontiguousarray(forcing), st.rho, 0.0)

    # crisis memory (global) on the full calendar
    events = []
    for frac, mag, label in cfg.crises:
        idx = cfg.burn_in + int(frac * (cfg.t_obs - 1))
        events.append(CrisisEvent(onset=full_dates[idx], magnitude=mag, label=label))
    c_full = crisis_memory(events, cfg.lam, full_dates).values

    z, rho_truth = _draw_innovations(cfg, joint, t_total)

    if n == 1:
        wc = np.zeros((t_total, 1, 1))
    elif cfg.network_mode == FIXED_MATRIX:
        wc = np.broadcast_to(np.asarray(cfg.fixed_wc, dtype=np.float64),
                             (t_total, n, n)).copy()
    else:
        wc = rho_to_weights(rho_truth)

    governance = synthetic_governance(cfg.markets)
    gov_markets, wi = similarity_network(governance)
    if gov_markets != tuple(sorted(cfg.markets)):
        raise InputError("governance market set mismatch")
    order = [sorted(cfg.markets).index(m) for m in cfg.markets]
    wi = wi[np.ix_(order, order)]

    net_c = np.einsum("tij,tj->ti", wc, states)
    net_i = np.zeros((t_total, n))
    net_i[1:] = states[:-1] @ wi.T

    eta = np.column_stack([rngs[i].normal(0.0, cfg.sigma_noise_sd, t_total)
                           for i in range(n)])

    sigma = np.empty((t_total, n))
    returns = np.empty((t_total, n))
    sigma[0] = max(cfg.b0 / (1.0 - cfg.b1), SIGMA_FLOOR)
    returns[0] = sigma[0] * z[0]
    floor_hits = 0
    for t in range(1, t_total):
        s = (cfg.b0 + cfg.b1 * sigma[t - 1] + cfg.b2 * returns[t - 1] ** 2
             + cfg.psi * c_full[t] + cfg.gamma1 * states[t]
             + cfg.gamma2 * net_c[t] + cfg.gamma3 * net_i[t] + eta[t])
        hit = s < SIGMA_FLOOR
        floor_hits += int(hit.sum())
        s = np.where(hit, SIGMA_FLOOR, s)
        if (s > SIGMA_CAP).any():
            raise GenerationError(
                f"explosive volatility path (b1={cfg.b1}, b2={cfg.b2}); "
                "reduce persistence or noise")
        sigma[t] = s
        returns[t] = s * z[t]

    keep = slice(cfg.burn_in, None)
    series = {}
    sigma_out = {}
    states_out = {}
    shock_sets = {}
    c_out = c_full[keep]
    for i, m in enumerate(cfg.markets):
        series[m] = DatedSeries(out_dates, returns[keep, i])
        sigma_out[m] = DatedSeries(out_dates, sigma[keep, i])
        states_out[m] = DatedSeries(out_dates, states[keep, i])
        shock_sets[m] = ShockSet(
            deltaP=DatedSeries(out_dates, dp[keep, i]),
            deltaI=DatedSeries(out_dates, di[keep, i]),
            crisis_memory=DatedSeries(out_dates, c_out),
            lam=cfg.lam,
        )
    network = NetworkSequence(
        dates=out_dates, markets=cfg.markets, wc=wc[keep],
        wi=wi, rho=None if rho_truth is None else rho_truth[keep],
        variant="real",
    )
    return SyntheticPanel(
        config=cfg,
        panel=ReturnPanel(markets=cfg.markets, returns=series, scale=PERCENT, aligned=True),
        sigma=sigma_out, states=states_out, shocks=shock_sets,
        network=network, governance=governance, floor_hits=floor_hits,
    )


def simulate_garch_returns(family, params, distribution, t_obs, seed,
                           burn_in=250, start_date="2010-01-04"):
    """Returns from a pure GARCH process (for baseline recovery tests)."""
    if family not in FAMILIES:
        raise InputError(f"family must be one of {FAMILIES}")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    t_total = t_obs + burn_in
    z = dists.rvs(distribution, params.shape, t_total, rng)
    r = np.empty(t_total)
    if family == EGARCH:
        lns2 = params.omega / (1.0 - params.beta)
        s = np.exp(0.5 * lns2)
        r[0] = s * z[0]
        for t in range(1, t_total):
            lns2 = (params.omega + params.alpha * abs(z[t - 1])
                    + params.gamma * z[t - 1] + params.beta * lns2)
            s = np.exp(0.5 * lns2)
            r[t] = s * z[t]
    else:
        pers = params.alpha + params.beta + params.gamma / 2.0
        s2 = params.omega / (1.0 - pers)
        r[0] = np.sqrt(s2) * z[0]
        for t in range(1, t_total):
            e = r[t - 1]
            s2 = (params.omega + (params.alpha + params.gamma * (e < 0)) * e * e
                  + params.beta * s2)
            r[t] = np.sqrt(s2) * z[t]
    dates = pd.bdate_range(start_date, periods=t_total).values
    return DatedSeries(dates[burn_in:], (r + params.mu)[burn_in:])


def _synthetic_epu(markets, first_month, last_month, seed):
    """Monthly AR(1) uncertainty series per market (demo inputs)."""
    months = pd.period_range(first_month, last_month, freq="M")
    rows = []
    for i, m in enumerate(sorted(markets)):
        rng = _market_rng(seed, 20_000 + i)
        level = 100.0
        for month in months:
            level = 100.0 + 0.8 * (level - 100.0) + rng.normal(0.0, 15.0)
            rows.append({"month": str(month), "market": m,
                         "epu": round(max(level, 5.0), 4)})
    return pd.DataFrame(rows)


def write_scenario(syn, outdir):
    """Write the CSV inputs the ingestion pipeline reads, plus a truth
    sidecar; returns the list of written paths."""
    import os

    os.makedirs(outdir, exist_ok=True)
    cfg = syn.config
    paths = []

    # prices: anchor each market at 100 one business day before the sample
    first = pd.Timestamp(syn.panel.returns[cfg.markets[0]].dates[0])
    base_date = (first - pd.tseries.offsets.BDay(1)).to_datetime64()
    rows = []
    for m in cfg.markets:
        s = syn.panel.returns[m]
        div = 100.0 if syn.panel.scale == PERCENT else 1.0
        prices = 100.0 * np.exp(np.cumsum(s.values) / div)
        rows.append(pd.DataFrame({
            "date": np.concatenate([[base_date], s.dates]),
            "market": m,
            "price": np.concatenate([[100.0], prices]),
        }))
    prices_df = pd.concat(rows, ignore_index=True)
    prices_df["date"] = pd.DatetimeIndex(prices_df["date"]).strftime("%Y-%m-%d")
    p = os.path.join(outdir, "prices.csv")
    prices_df.to_csv(p, index=False)
    paths.append(p)

    # events: per-market policy days plus the global crisis onsets
    ev_rows = []
    for m in cfg.markets:
        dp = syn.shocks[m].deltaP
        for d in dp.dates[dp.values > 0]:
            ev_rows.append({"date": pd.Timestamp(d).strftime("%Y-%m-%d"),
                            "market": m, "type": "policy", "magnitude": 1.0})
    full_dates = pd.bdate_range(cfg.start_date, periods=cfg.t_obs + cfg.burn_in)
    for frac, mag, label in cfg.crises:
        onset = full_dates[cfg.burn_in + int(frac * (cfg.t_obs - 1))]
        for m in cfg.markets:
            ev_rows.append({"date": onset.strftime("%Y-%m-%d"), "market": m,
                            "type": "crisis", "magnitude": mag})
    p = os.path.join(outdir, "events.csv")
    pd.DataFrame(ev_rows).to_csv(p, index=False)
    paths.append(p)

    # monthly uncertainty with 14 months of pre-sample history
    first_month = (first - pd.DateOffset(months=14)).to_period("M")
    last_month = pd.Timestamp(syn.panel.returns[cfg.markets[0]].dates[-1]).to_period("M")
    p = os.path.join(outdir, "epu.csv")
    _synthetic_epu(cfg.markets, first_month, last_month, cfg.seed).to_csv(p, index=False)
    paths.append(p)

    gov_rows = [{"market": m, **{f"g{i+1}": v for i, v in enumerate(vec)}}
                for m, vec in sorted(syn.governance.items())]
    p = os.path.join(outdir, "governance.csv")
    pd.DataFrame(gov_rows).to_csv(p, index=False)
    paths.append(p)

    sig_rows = []
    for m in cfg.markets:
        s = syn.sigma[m]
        sig_rows.append(pd.DataFrame({
            "date": pd.DatetimeIndex(s.dates).strftime("%Y-%m-%d"),
            "market": m, "sigma": s.values,
        }))
    p = os.path.join(outdir, "true_sigma.csv")
    pd.concat(sig_rows, ignore_index=True).to_csv(p, index=False)
    paths.append(p)

    truth = {"config": cfg.to_dict(), "floor_hits": syn.floor_hits,
             "governance_note": "synthetic demo vectors"}
    p = os.path.join(outdir, "truth.json")
    with open(p, "w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
    paths.append(p)
    return paths
