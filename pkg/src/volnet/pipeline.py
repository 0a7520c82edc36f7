"""Config-driven pipeline: reads the INI run configuration, executes stages
in dependency order, writes the table/plot CSVs, and records a manifest
with per-stage timings and output hashes."""

import configparser
import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from volnet import dists, evaluate, garch, midas, networks, nirdm, panel, shocks
from volnet import irdm as irdm_mod
from volnet import timeseries as ts
from volnet.errors import InputError, VolnetError

STAGE_DEPS = {
    "ingest": (),
    "shocks": ("ingest",),
    "midas": ("ingest",),
    "baseline": ("ingest",),
    "irdm": ("baseline", "shocks"),
    "networks": ("baseline",),
    "nirdm": ("irdm", "networks"),
    "panel": ("baseline", "shocks", "midas"),
    "evaluate": ("irdm", "nirdm"),
    "robustness": ("nirdm",),
}
ALL_STAGES = tuple(STAGE_DEPS)
# stages that require a panel aligned on a common calendar
NEEDS_INTERSECT = {"networks", "nirdm", "panel", "evaluate", "robustness"}
# stages whose outputs depend on these input files
STAGE_INPUTS = {"ingest": ("prices",), "midas": ("epu",), "networks": ("governance",)}


@dataclass
class RunConfig:
    prices: str = None
    events: str = None
    epu: str = None
    governance: str = None
    out: str = "out"
    seed: int = 42
    markets: tuple = None  # None = all markets in the prices file
    stages: tuple = ALL_STAGES
    scale: str = ts.PERCENT
    alignment: str = ts.INTERSECT
    lam: float = shocks.DEFAULT_LAMBDA
    info_window: int = 60
    policy_window: int = 0
    midas_config: midas.MidasConfig = field(default_factory=midas.MidasConfig)
    garch_families: tuple = (garch.EGARCH, garch.GJR)
    garch_distributions: tuple = (dists.STUDENT_T,)
    error_mode: str = evaluate.INSAMPLE
    dm_bandwidth: int = None
    rolling_window: int = 500
    bootstrap_draws: int = 999
    placebo_seed: int = 0
    marginal_grid: tuple = (-2.0, 2.0, 41)


def _expand_stages(requested):
    """Dependency closure in canonical order."""
    wanted = set()

    def add(s):
        if s in wanted:
            return
        for d in STAGE_DEPS[s]:
            add(d)
        wanted.add(s)

    for s in requested:
        add(s)
    return tuple(s for s in ALL_STAGES if s in wanted)


def load_config(path, overrides=None):
    """Parse and validate the INI config; all problems reported at once."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    problems = []
    if not read:
        raise InputError(f"config file not found: {path}")
    cfg = RunConfig()

    def get(section, option, cast, default, problems=problems):
        if not parser.has_option(section, option):
            return default
        raw = parser.get(section, option)
        try:
            return cast(raw)
        except (ValueError, InputError) as exc:
            problems.append(f"[{section}] {option} = {raw!r}: {exc}")
            return default

    split = lambda raw: tuple(s.strip() for s in raw.split(",") if s.strip())

    cfg.prices = get("inputs", "prices", str, None)
    cfg.events = get("inputs", "events", str, None)
    cfg.epu = get("inputs", "epu", str, None)
    cfg.governance = get("inputs", "governance", str, None)
    cfg.out = get("run", "out", str, cfg.out)
    cfg.seed = get("run", "seed", int, cfg.seed)
    cfg.markets = get("run", "markets", split, None)
    cfg.stages = get("run", "stages", split, cfg.stages)
    cfg.scale = get("returns", "scale", str, cfg.scale)
    cfg.alignment = get("returns", "alignment", str, cfg.alignment)
    cfg.lam = get("shocks", "lambda", float, cfg.lam)
    cfg.info_window = get("shocks", "info_window", int, cfg.info_window)
    cfg.policy_window = get("shocks", "policy_window", int, cfg.policy_window)
    mc = dict(
        n_lags=get("midas", "n_lags", int, cfg.midas_config.n_lags),
        scheme=get("midas", "scheme", str, cfg.midas_config.scheme),
        theta1=get("midas", "theta1", float, cfg.midas_config.theta1),
        theta2=get("midas", "theta2", float, cfg.midas_config.theta2),
        standardize=get("midas", "standardize", lambda s: s.lower() in ("1", "true", "yes"),
                        cfg.midas_config.standardize),
    )
    cfg.garch_families = get("garch", "families", split, cfg.garch_families)
    cfg.garch_distributions = get("garch", "distributions", split, cfg.garch_distributions)
    cfg.error_mode = get("evaluate", "error_mode", str, cfg.error_mode)
    cfg.dm_bandwidth = get("evaluate", "dm_bandwidth", int, cfg.dm_bandwidth)
    cfg.rolling_window = get("evaluate", "rolling_window", int, cfg.rolling_window)
    cfg.bootstrap_draws = get("panel", "bootstrap_draws", int, cfg.bootstrap_draws)
    cfg.placebo_seed = get("robustness", "placebo_seed", int, cfg.placebo_seed)

    if overrides:
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)

    try:
        cfg.midas_config = midas.MidasConfig(**mc)
    except InputError as exc:
        problems.append(f"[midas]: {exc}")

    unknown = [s for s in cfg.stages if s not in STAGE_DEPS]
    if unknown:
        problems.append(f"unknown stages: {unknown}")
    else:
        cfg.stages = _expand_stages(cfg.stages)
    if cfg.scale not in ts.SCALES:
        problems.append(f"scale must be one of {ts.SCALES}")
    if cfg.alignment not in ts.ALIGNMENTS:
        problems.append(f"alignment must be one of {ts.ALIGNMENTS}")
    if cfg.lam <= 0:
        problems.append("lambda must be positive")
    bad_fams = [f for f in cfg.garch_families if f not in garch.FAMILIES]
    if bad_fams or not cfg.garch_families:
        problems.append(f"garch families must be a non-empty subset of {garch.FAMILIES}")
    bad_dists = [d for d in cfg.garch_distributions if d not in dists.DISTRIBUTIONS]
    if bad_dists or not cfg.garch_distributions:
        problems.append(f"garch distributions must be a non-empty subset of {dists.DISTRIBUTIONS}")
    if cfg.error_mode not in (evaluate.INSAMPLE, evaluate.EXPANDING):
        problems.append("error_mode must be 'insample' or 'expanding'")

    # fail fast on missing input files for the requested stages
    for stage in cfg.stages if not unknown else ():
        for inp in STAGE_INPUTS.get(stage, ()):
            value = getattr(cfg, inp)
            if value is None:
                problems.append(f"stage {stage!r} needs [inputs] {inp}")
            elif not Path(value).exists():
                problems.append(f"[inputs] {inp} = {value}: file not found")
    if cfg.events is not None and not Path(cfg.events).exists():
        problems.append(f"[inputs] events = {cfg.events}: file not found")

    if problems:
        raise InputError("invalid configuration:\n  " + "\n  ".join(problems))
    return cfg


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write(ctx, df, name):
    path = Path(ctx["cfg"].out) / name
    df.to_csv(path, index=False)
    ctx["outputs"].append(str(path))
    return path


def _dates_col(dates):
    return pd.DatetimeIndex(dates).strftime("%Y-%m-%d")


# ---------------------------------------------------------------- stages


def stage_ingest(cfg, ctx):
    prices = ts.load_prices(cfg.prices, cfg.scale)
    if cfg.markets:
        missing = [m for m in cfg.markets if m not in prices.markets]
        if missing:
            raise InputError(f"markets not in prices file: {missing}")
        prices = ts.PricePanel(markets=tuple(cfg.markets),
                               series={m: prices.series[m] for m in cfg.markets})
    returns = ts.to_log_returns(prices, cfg.scale)
    alignment = cfg.alignment
    if alignment == ts.PER_MARKET and NEEDS_INTERSECT & set(cfg.stages):
        warnings.warn("network/evaluation stages need a common calendar; using intersect alignment")
        alignment = ts.INTERSECT
    if len(returns.markets) > 1:
        returns = ts.align_panel(returns, alignment)
    ctx["returns"] = returns
    rows = []
    for m in returns.markets:
        s = returns.returns[m]
        rows.append(pd.DataFrame({"date": _dates_col(s.dates), "market": m,
                                  "ret": s.values}))
    _write(ctx, pd.concat(rows, ignore_index=True), "returns.csv")


def _load_events(cfg, markets):
    policy = {m: [] for m in markets}
    crises = {m: [] for m in markets}
    if cfg.events is None:
        warnings.warn("no events file; policy shocks all zero, default crisis set used")
    else:
        df = pd.read_csv(cfg.events)
        expected = {"date", "market", "type", "magnitude"}
        if set(df.columns) != expected:
            raise InputError(f"events file needs columns {sorted(expected)}")
        for _, row in df.iterrows():
            m = str(row["market"])
            if m not in policy:
                continue
            if row["type"] == "policy":
                policy[m].append(np.datetime64(row["date"], "ns"))
            elif row["type"] == "crisis":
                crises[m].append(shocks.CrisisEvent(onset=row["date"],
                                                    magnitude=float(row["magnitude"]),
                                                    label="csv"))
            else:
                raise InputError(f"unknown event type {row['type']!r}")
    for m in markets:
        if not crises[m]:
            crises[m] = [shocks.CrisisEvent(onset=d, magnitude=mag, label=lab)
                         for d, mag, lab in shocks.DEFAULT_CRISES]
    return policy, crises


def stage_shocks(cfg, ctx):
    returns = ctx["returns"]
    policy, crises = _load_events(cfg, returns.markets)
    ctx["shock_parts"] = {}
    rows = []
    for m in returns.markets:
        r = returns.returns[m]
        in_span = [d for d in policy[m] if d >= r.dates[0]]
        dp = shocks.policy_shocks(in_span, r.dates, cfg.policy_window)
        di = shocks.information_shocks(r, cfg.info_window)
        cm = shocks.crisis_memory(crises[m], cfg.lam, r.dates)
        ctx["shock_parts"][m] = (dp, di, cm)
        rows.append(pd.DataFrame({"date": _dates_col(r.dates), "market": m,
                                  "deltaP": dp.values, "deltaI": di.values,
                                  "crisis_memory": cm.values}))
    _write(ctx, pd.concat(rows, ignore_index=True), "shocks.csv")


def stage_baseline(cfg, ctx):
    returns = ctx["returns"]
    fits = {}
    rows = []
    for m in returns.markets:
        for family in cfg.garch_families:
            for dist in cfg.garch_distributions:
                fit = garch.fit_garch(returns.returns[m], garch.GarchSpec(family, dist))
                fits[(m, family, dist)] = fit
                p = fit.params
                rows.append({
                    "country": m, "model": family, "dist": dist,
                    "omega": p.omega, "alpha": p.alpha, "beta": p.beta,
                    "gamma": p.gamma, "shape": p.shape,
                    "persistence": fit.persistence, "loglik": fit.loglik,
                    "aic": fit.aic_norm,
                })
    ctx["garch_fits"] = fits
    _write(ctx, pd.DataFrame(rows), "baseline_garch_params.csv")

    # realized-volatility proxy from the first-family/first-distribution fit
    base_family = garch.EGARCH if garch.EGARCH in cfg.garch_families else cfg.garch_families[0]
    base_dist = cfg.garch_distributions[0]
    ctx["target"] = {}
    ctx["rv"] = {}
    ctx["kappa"] = {}
    sigma_rows, rv_rows = [], []
    for m in returns.markets:
        fit = fits[(m, base_family, base_dist)]
        rv, kappa = shocks.rv_proxy(returns.returns[m], fit.sigma)
        target = shocks.volatility_target(rv)
        ctx["rv"][m] = rv
        ctx["kappa"][m] = kappa
        ctx["target"][m] = target
        sigma_rows.append(pd.DataFrame({
            "date": _dates_col(fit.sigma.dates), "market": m,
            "model": base_family, "sigma": fit.sigma.values}))
        rv_rows.append(pd.DataFrame({
            "date": _dates_col(rv.dates), "market": m, "rv": rv.values,
            "sigma_target": target.values}))
    _write(ctx, pd.concat(sigma_rows, ignore_index=True), "baseline_sigma.csv")
    _write(ctx, pd.concat(rv_rows, ignore_index=True), "rv_target.csv")


def stage_midas(cfg, ctx):
    returns = ctx["returns"]
    epu = pd.read_csv(cfg.epu)
    if set(epu.columns) != {"month", "market", "epu"}:
        raise InputError("epu file needs columns month,market,epu")
    ctx["index"] = {}
    rows = []
    for m in returns.markets:
        sub = epu[epu["market"] == m]
        if sub.empty:
            raise InputError(f"no epu rows for market {m}")
        series = {str(row["month"]): float(row["epu"]) for _, row in sub.iterrows()}
        idx = midas.build_index(series, returns.returns[m].dates, cfg.midas_config)
        ctx["index"][m] = idx
        rows.append(pd.DataFrame({"date": _dates_col(idx.series.dates), "market": m,
                                  "L": idx.series.values}))
    _write(ctx, pd.concat(rows, ignore_index=True), "institutional_index.csv")


def _shock_sets(cfg, ctx):
    sets = {}
    for m, (dp, di, cm) in ctx["shock_parts"].items():
        sets[m] = shocks.ShockSet(deltaP=dp, deltaI=di, crisis_memory=cm,
                                  lam=cfg.lam, rv=ctx["rv"][m], kappa=ctx["kappa"][m])
    return sets


def stage_irdm(cfg, ctx):
    returns = ctx["returns"]
    shock_sets = _shock_sets(cfg, ctx)
    ctx["shock_sets"] = shock_sets
    ctx["irdm_fits"] = {}
    rows, fitted_rows = [], []
    for m in returns.markets:
        fit = irdm_mod.fit_irdm(ctx["target"][m], returns.returns[m], shock_sets[m])
        ctx["irdm_fits"][m] = fit
        rows.append({"country": m, "b0": fit.b0, "b1": fit.b1, "b2": fit.b2,
                     "psi": fit.psi, "gamma1": fit.gamma1, "rmse": fit.rmse})
        fitted = fit.fitted_sigma
        fitted_rows.append(pd.DataFrame({
            "date": _dates_col(fitted.dates), "market": m,
            "target": ctx["target"][m].restrict(fitted.dates).values,
            "fitted": fitted.values}))
    _write(ctx, pd.DataFrame(rows), "irdm_params.csv")
    _write(ctx, pd.concat(fitted_rows, ignore_index=True), "irdm_fitted.csv")


def stage_networks(cfg, ctx):
    returns = ctx["returns"]
    markets = returns.markets
    if len(markets) < 2:
        raise InputError("network stage needs at least 2 markets")
    base_family = garch.EGARCH if garch.EGARCH in cfg.garch_families else cfg.garch_families[0]
    base_dist = cfg.garch_distributions[0]
    z = np.column_stack([ctx["garch_fits"][(m, base_family, base_dist)].z.values
                         for m in markets])
    params, rho = networks.fit_dcc(z, markets=markets)
    ctx["dcc"] = params

    gov = pd.read_csv(cfg.governance)
    if "market" not in gov.columns or gov.shape[1] < 2:
        raise InputError("governance file needs a market column plus score columns")
    vectors = {str(r["market"]): r.drop("market").to_numpy(dtype=float)
               for _, r in gov.iterrows() if str(r["market"]) in markets}
    missing = [m for m in markets if m not in vectors]
    if missing:
        raise InputError(f"governance vectors missing for: {missing}")
    wi_markets, wi = networks.similarity_network(vectors)
    order = [wi_markets.index(m) for m in markets]
    wi = wi[np.ix_(order, order)]

    dates = returns.returns[markets[0]].dates
    net = networks.correlation_network(rho, dates, markets, wi=wi)
    ctx["network"] = net

    rows = []
    for i, mi in enumerate(markets):
        for j, mj in enumerate(markets):
            if i == j:
                continue
            rows.append(pd.DataFrame({"date": _dates_col(dates), "i": mi, "j": mj,
                                      "w": net.wc[:, i, j]}))
    _write(ctx, pd.concat(rows, ignore_index=True), "network_corr.csv")
    sim_rows = [{"i": mi, "j": mj, "w": wi[i, j]}
                for i, mi in enumerate(markets) for j, mj in enumerate(markets) if i != j]
    _write(ctx, pd.DataFrame(sim_rows), "network_similarity.csv")


def stage_nirdm(cfg, ctx):
    returns = ctx["returns"]
    net = ctx["network"]
    states = {m: f.state_series for m, f in ctx["irdm_fits"].items()}
    ctx["states"] = states
    ctx["nirdm_fits"] = {}
    rows, fitted_rows = [], []
    for m in returns.markets:
        fit = nirdm.fit_nirdm(m, ctx["target"][m], returns.returns[m],
                              ctx["shock_sets"][m], states, net)
        ctx["nirdm_fits"][m] = fit
        rows.append({"country": m, "b0": fit.b0, "b1": fit.b1, "b2": fit.b2,
                     "psi": fit.psi, "gamma1": fit.gamma1, "gamma2": fit.gamma2,
                     "gamma3": fit.gamma3, "aic": fit.aic_approx})
        fitted = fit.fitted_sigma
        fitted_rows.append(pd.DataFrame({
            "date": _dates_col(fitted.dates), "market": m,
            "target": ctx["target"][m].restrict(fitted.dates).values,
            "fitted": fitted.values}))
    _write(ctx, pd.DataFrame(rows), "nirdm_params.csv")
    _write(ctx, pd.concat(fitted_rows, ignore_index=True), "nirdm_fitted.csv")
    ctx["notes"].append(
        "nirdm aic column uses the n*ln(SSE/n)+2k convention (k=7)")


def stage_panel(cfg, ctx):
    returns = ctx["returns"]
    rows = []
    for m in returns.markets:
        dp, di, _ = ctx["shock_parts"][m]
        L = ctx["index"][m].series
        tgt = ctx["target"][m]
        for i in range(len(tgt)):
            rows.append(panel.PanelRow(country=m, date=tgt.dates[i],
                                       sigma=tgt.values[i], deltaP=dp.values[i],
                                       deltaI=di.values[i], L=L.values[i]))
    fit = panel.fit_panel(rows)
    if fit.n_clusters < 10:
        warnings.warn(
            f"only {fit.n_clusters} clusters; clustered inference is unreliable, "
            "see the wild-bootstrap column")
    wild = panel.wild_cluster_bootstrap(fit, cfg.bootstrap_draws, cfg.seed)
    table = pd.DataFrame({
        "variable": fit.names, "coef": fit.coef, "se": fit.se,
        "t": fit.tstat, "p": fit.pvalue, "wild_p": wild,
    })
    _write(ctx, table, "panel_interaction.csv")
    lo, hi, num = cfg.marginal_grid
    curve = panel.marginal_effect_policy(fit, np.linspace(lo, hi, int(num)))
    _write(ctx, pd.DataFrame({"L": curve["L"], "effect": curve["effect"],
                              "se_lo": curve["lo"], "se_hi": curve["hi"]}),
           "marginal_effect_policy.csv")
    ctx["panel_fit"] = fit


def stage_evaluate(cfg, ctx):
    returns = ctx["returns"]
    fits_by_market = {}
    for m in returns.markets:
        m0 = irdm_mod.fit_variance_baseline(ctx["target"][m], returns.returns[m])
        fits_by_market[m] = {"M0": m0, "M1": ctx["irdm_fits"][m],
                             "M2": ctx["nirdm_fits"][m]}
    table, improvements = evaluate.compare_models(fits_by_market, ctx["target"])
    _write(ctx, table, "model_compare.csv")
    _write(ctx, improvements, "rmse_improvement.csv")

    test_rows = []
    rolling_frames = []
    for m in returns.markets:
        fits = fits_by_market[m]
        errs = {label: evaluate.model_errors(f, ctx["target"][m], cfg.error_mode)
                for label, f in fits.items()}
        for rich in ("M1", "M2"):
            dm = evaluate.dm_test(errs[rich], errs["M0"], bandwidth=cfg.dm_bandwidth)
            test_rows.append({"country": m, "test": f"DM ({rich} vs M0)",
                              "stat": dm.statistic, "pval": dm.pvalue, "Tobs": dm.t_obs})
        for rich in ("M1", "M2"):
            enc = evaluate.enc_new(errs["M0"], errs[rich])
            test_rows.append({"country": m, "test": f"ENC-NEW({rich} M0)",
                              "stat": enc.statistic, "pval": enc.pvalue, "Tobs": enc.t_obs})
        if len(errs["M0"]) >= cfg.rolling_window:
            roll = evaluate.rolling_dm(errs["M2"], errs["M0"], cfg.rolling_window,
                                       bandwidth=cfg.dm_bandwidth)
            roll.insert(0, "country", m)
            rolling_frames.append(roll)
        else:
            warnings.warn(f"{m}: sample too short for rolling DM window {cfg.rolling_window}")
    _write(ctx, pd.DataFrame(test_rows), "dm_enc_results.csv")
    if rolling_frames:
        roll = pd.concat(rolling_frames, ignore_index=True)
        roll["date"] = roll["date"].dt.strftime("%Y-%m-%d")
        _write(ctx, roll.drop(columns=["degenerate"]), "dm_rolling.csv")
    ctx["notes"].append(f"evaluation error mode: {cfg.error_mode}")
    ctx["notes"].append("ENC-NEW p-values are normal approximations (approx flag)")


def stage_robustness(cfg, ctx):
    net = ctx["network"]
    variants = [net,
                networks.perturb_network(net, "permute", seed=cfg.placebo_seed),
                networks.perturb_network(net, "shift5"),
                networks.perturb_network(net, "lag1")]
    returns = {m: ctx["returns"].returns[m] for m in ctx["returns"].markets}
    rows = nirdm.placebo_regression(ctx["target"], returns, ctx["shock_sets"],
                                    ctx["states"], variants)
    _write(ctx, pd.DataFrame(rows), "placebo_networks.csv")


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "shocks": stage_shocks,
    "midas": stage_midas,
    "baseline": stage_baseline,
    "irdm": stage_irdm,
    "networks": stage_networks,
    "nirdm": stage_nirdm,
    "panel": stage_panel,
    "evaluate": stage_evaluate,
    "robustness": stage_robustness,
}


def run(cfg):
    """Execute the configured stages; returns the manifest dict.

    A stage failure stops the pipeline; the manifest still records the
    completed stages and is written either way.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in vars(cfg).items() if not k.startswith("_")},
        "stages": [],
        "warnings": [],
        "notes": [],
        "status": "ok",
    }
    manifest["config"]["midas_config"] = vars(cfg.midas_config).copy()
    ctx = {"cfg": cfg, "outputs": [], "notes": manifest["notes"]}
    try:
        for stage in cfg.stages:
            ctx["outputs"] = []
            start = time.perf_counter()
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                STAGE_FUNCS[stage](cfg, ctx)
            manifest["warnings"].extend(f"{stage}: {w.message}" for w in caught)
            manifest["stages"].append({
                "name": stage,
                "seconds": round(time.perf_counter() - start, 3),
                "outputs": [{"path": p, "sha256": _sha256(p)} for p in ctx["outputs"]],
            })
    except VolnetError as exc:
        manifest["status"] = "failed"
        manifest["error"] = {"stage": stage, "message": str(exc)}
        _write_manifest(out, manifest)
        raise
    _write_manifest(out, manifest)
    return manifest


def _write_manifest(out, manifest):
    with open(out / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
