import numpy as np
import pandas as pd
import pytest

from volnet import irdm, networks, nirdm, shocks, simgen
from volnet.errors import InputError
from volnet.timeseries import DatedSeries


def dates(n):
    return pd.bdate_range("2020-01-01", periods=n).values


def const_network(wc_rows, wi, n_dates, markets):
    n = len(markets)
    wc = np.broadcast_to(np.asarray(wc_rows, float), (n_dates, n, n)).copy()
    return networks.NetworkSequence(dates=dates(n_dates), markets=markets,
                                    wc=wc, wi=np.asarray(wi, float), variant="real")


class TestSpilloverTerms:
    def test_zero_foreign_states(self):
        d = dates(6)
        states = {m: DatedSeries(d, np.zeros(6)) for m in ("A", "B")}
        net = const_network([[0.0, 1.0], [1.0, 0.0]], np.zeros((2, 2)), 6, ("A", "B"))
        nc, ni = nirdm.spillover_terms(states, net, "A")
        assert np.all(nc.values == 0.0)
        assert np.all(ni.values == 0.0)

    def test_single_neighbor_pass_through(self):
        d = dates(5)
        states = {"A": DatedSeries(d, np.zeros(5)),
                  "B": DatedSeries(d, np.full(5, 0.5))}
        net = const_network([[0.0, 1.0], [1.0, 0.0]], np.zeros((2, 2)), 5, ("A", "B"))
        nc, _ = nirdm.spillover_terms(states, net, "A")
        np.testing.assert_allclose(nc.values, 0.5)

    def test_weighted_mean(self):
        d = dates(4)
        states = {"A": DatedSeries(d, np.zeros(4)),
                  "B": DatedSeries(d, np.full(4, 0.2)),
                  "C": DatedSeries(d, np.full(4, 0.4))}
        rows = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]
        net = const_network(rows, np.zeros((3, 3)), 4, ("A", "B", "C"))
        nc, _ = nirdm.spillover_terms(states, net, "A")
        np.testing.assert_allclose(nc.values, 0.3, atol=1e-15)

    def test_similarity_term_lags(self):
        d = dates(4)
        states = {"A": DatedSeries(d, np.arange(4.0)),
                  "B": DatedSeries(d, np.arange(4.0) * 10)}
        wi = np.array([[0.0, 1.0], [1.0, 0.0]])
        net = const_network([[0.0, 1.0], [1.0, 0.0]], wi, 4, ("A", "B"))
        _, ni = nirdm.spillover_terms(states, net, "A")
        assert len(ni) == 3  # first date dropped
        np.testing.assert_allclose(ni.values, [0.0, 10.0, 20.0])

    def test_lag1_variant_shifts_correlation_term(self):
        d = dates(4)
        states = {"A": DatedSeries(d, np.zeros(4)),
                  "B": DatedSeries(d, np.array([1.0, 2.0, 3.0, 4.0]))}
        net = const_network([[0.0, 1.0], [1.0, 0.0]], np.zeros((2, 2)), 4, ("A", "B"))
        lagged = networks.perturb_network(net, "lag1")
        nc, _ = nirdm.spillover_terms(states, lagged, "A")
        np.testing.assert_allclose(nc.values, [1.0, 2.0, 3.0])

    def test_missing_market(self):
        d = dates(4)
        states = {"A": DatedSeries(d, np.zeros(4)), "B": DatedSeries(d, np.zeros(4))}
        net = const_network([[0.0, 1.0], [1.0, 0.0]], np.zeros((2, 2)), 4, ("A", "B"))
        with pytest.raises(InputError):
            nirdm.spillover_terms(states, net, "Z")

    def test_linearity_in_foreign_states(self):
        d = dates(6)
        rng = np.random.default_rng(0)
        sa = rng.standard_normal(6)
        sb = rng.standard_normal(6)
        net = const_network([[0.0, 1.0], [1.0, 0.0]], np.ones((2, 2)) - np.eye(2),
                            6, ("A", "B"))
        z = {"A": DatedSeries(d, np.zeros(6)), "B": DatedSeries(d, sa)}
        w = {"A": DatedSeries(d, np.zeros(6)), "B": DatedSeries(d, sb)}
        both = {"A": DatedSeries(d, np.zeros(6)), "B": DatedSeries(d, 2 * sa + 3 * sb)}
        nc_a, ni_a = nirdm.spillover_terms(z, net, "A")
        nc_b, ni_b = nirdm.spillover_terms(w, net, "A")
        nc_c, ni_c = nirdm.spillover_terms(both, net, "A")
        np.testing.assert_allclose(nc_c.values, 2 * nc_a.values + 3 * nc_b.values,
                                   atol=1e-12)
        np.testing.assert_allclose(ni_c.values, 2 * ni_a.values + 3 * ni_b.values,
                                   atol=1e-12)


@pytest.fixture(scope="module")
def net_scenario():
    cfg = simgen.ScenarioConfig(t_obs=2000, seed=5, b0=0.085, b1=0.85, b2=0.005,
                                psi=0.031, gamma1=0.128, gamma2=0.072, gamma3=0.011,
                                sigma_noise_sd=0.05, innovation_df=8.0)
    return cfg, simgen.simulate(cfg)


class TestFitNirdm:
    def test_recovery(self, net_scenario):
        cfg, syn = net_scenario
        fit = nirdm.fit_nirdm("IDN", syn.sigma["IDN"], syn.panel.returns["IDN"],
                              syn.shocks["IDN"], syn.states, syn.network)
        assert fit.gamma2 == pytest.approx(cfg.gamma2, abs=0.03)
        assert fit.gamma1 == pytest.approx(cfg.gamma1, abs=0.04)
        assert fit.psi == pytest.approx(cfg.psi, abs=0.04)

    def test_zero_network_reduces_to_irdm(self, net_scenario):
        _, syn = net_scenario
        m = "IDN"
        n = len(syn.network.markets)
        zero_net = networks.NetworkSequence(
            dates=syn.network.dates, markets=syn.network.markets,
            wc=np.zeros_like(syn.network.wc), wi=np.zeros((n, n)), variant="real")
        with pytest.warns(UserWarning):
            f2 = nirdm.fit_nirdm(m, syn.sigma[m], syn.panel.returns[m],
                                 syn.shocks[m], syn.states, zero_net)
        f1 = irdm.fit_irdm(syn.sigma[m], syn.panel.returns[m], syn.shocks[m])
        assert f2.gamma2 == 0.0 and f2.gamma3 == 0.0
        assert set(f2.dropped) == {"net_c", "net_i"}
        for attr in ("b0", "b1", "b2", "psi", "gamma1"):
            assert getattr(f2, attr) == pytest.approx(getattr(f1, attr), rel=1e-10)

    def test_nesting_chain(self, net_scenario):
        _, syn = net_scenario
        m = "MYS"
        m0 = irdm.fit_variance_baseline(syn.sigma[m], syn.panel.returns[m])
        m1 = irdm.fit_irdm(syn.sigma[m], syn.panel.returns[m], syn.shocks[m])
        m2 = nirdm.fit_nirdm(m, syn.sigma[m], syn.panel.returns[m], syn.shocks[m],
                             syn.states, syn.network)
        assert m2.sse <= m1.sse <= m0.sse

    def test_equal_weight_permutation_fixed_point(self, net_scenario):
        # with equal weights everywhere, row permutation changes nothing
        _, syn = net_scenario
        m = "IDN"
        n = len(syn.network.markets)
        w = np.full((n, n), 1.0 / (n - 1))
        np.fill_diagonal(w, 0.0)
        eq_net = networks.NetworkSequence(
            dates=syn.network.dates, markets=syn.network.markets,
            wc=np.broadcast_to(w, syn.network.wc.shape).copy(),
            wi=syn.network.wi, variant="real")
        permuted = networks.perturb_network(eq_net, "permute", seed=7)
        f_a = nirdm.fit_nirdm(m, syn.sigma[m], syn.panel.returns[m], syn.shocks[m],
                              syn.states, eq_net)
        f_b = nirdm.fit_nirdm(m, syn.sigma[m], syn.panel.returns[m], syn.shocks[m],
                              syn.states, permuted)
        assert f_a.gamma2 == pytest.approx(f_b.gamma2, rel=1e-12)
        assert f_a.sse == pytest.approx(f_b.sse, rel=1e-12)


class TestPlaceboRegression:
    def _inputs(self, syn):
        returns = {m: syn.panel.returns[m] for m in syn.panel.markets}
        return syn.sigma, returns, syn.shocks, syn.states

    def test_requires_real_variant(self, net_scenario):
        _, syn = net_scenario
        targets, returns, shock_sets, states = self._inputs(syn)
        permuted = networks.perturb_network(syn.network, "permute", seed=1)
        with pytest.raises(InputError):
            nirdm.placebo_regression(targets, returns, shock_sets, states, [permuted])
        with pytest.raises(InputError):
            nirdm.placebo_regression(targets, returns, shock_sets, states,
                                     [permuted, permuted])

    def test_identical_variants_identical_rows(self, net_scenario):
        _, syn = net_scenario
        targets, returns, shock_sets, states = self._inputs(syn)
        rows = nirdm.placebo_regression(targets, returns, shock_sets, states,
                                        [syn.network, syn.network])
        assert rows[0]["estimate"] == rows[1]["estimate"]
        assert rows[0]["model"] == "Real network"

    def test_table_schema_labels(self, net_scenario):
        _, syn = net_scenario
        targets, returns, shock_sets, states = self._inputs(syn)
        variants = [syn.network,
                    networks.perturb_network(syn.network, "permute", seed=3),
                    networks.perturb_network(syn.network, "shift5"),
                    networks.perturb_network(syn.network, "lag1")]
        rows = nirdm.placebo_regression(targets, returns, shock_sets, states, variants)
        labels = [r["model"] for r in rows]
        assert labels == ["Real network", "Placebo permuted network",
                          "Placebo shifted network", "Lag1 network"]
        for r in rows:
            assert r["term"] == "netR_C"
            assert r["std_error"] > 0
            assert 0.0 <= r["p_value"] <= 1.0

    def test_spillover_null_within_two_ses(self):
        # gamma2 = gamma3 = 0 in the DGP: estimated spillover coefficients
        # within 2 classical SEs of 0 in >= 90% of seeds
        def ols_se(reg, name):
            kept = [n for n in reg.names if n not in reg.dropped]
            X, resid = reg.design, reg.resid
            dof = len(resid) - X.shape[1]
            s2 = float(resid @ resid) / dof
            cov = s2 * np.linalg.inv(X.T @ X)
            return float(np.sqrt(cov[kept.index(name), kept.index(name)]))

        hits = 0
        n_seeds = 10
        for seed in range(n_seeds):
            cfg = simgen.ScenarioConfig(t_obs=1000, seed=300 + seed,
                                        b0=0.085, b1=0.85, b2=0.005,
                                        psi=0.02, gamma1=0.05, gamma2=0.0,
                                        gamma3=0.0, sigma_noise_sd=0.05,
                                        innovation_df=8.0)
            syn = simgen.simulate(cfg)
            fit = nirdm.fit_nirdm("IDN", syn.sigma["IDN"], syn.panel.returns["IDN"],
                                  syn.shocks["IDN"], syn.states, syn.network,
                                  rho_grid=(0.85, 0.9, 0.95),
                                  theta2_grid=(0.3, 0.5, 0.7), refine=False)
            ok_g2 = abs(fit.gamma2) <= 2.0 * ols_se(fit.regression, "net_c")
            ok_g3 = abs(fit.gamma3) <= 2.0 * ols_se(fit.regression, "net_i")
            if ok_g2 and ok_g3:
                hits += 1
        assert hits >= 0.9 * n_seeds, hits

    def test_noise_spillover_insignificant(self):
        # netR_C replaced by independent noise: coefficient within 2 SEs of 0
        hits = 0
        n_seeds = 10
        for seed in range(n_seeds):
            cfg = simgen.ScenarioConfig(t_obs=800, seed=100 + seed, gamma2=0.0,
                                        gamma3=0.0, sigma_noise_sd=0.05,
                                        innovation_df=8.0)
            syn = simgen.simulate(cfg)
            rng = np.random.default_rng(seed)
            noise_states = {m: DatedSeries(s.dates, rng.standard_normal(len(s)))
                            for m, s in syn.states.items()}
            targets = syn.sigma
            returns = {m: syn.panel.returns[m] for m in syn.panel.markets}
            rows = nirdm.placebo_regression(targets, returns, syn.shocks,
                                            noise_states, [syn.network, syn.network])
            if abs(rows[0]["statistic"]) <= 2.0:
                hits += 1
        assert hits >= 8
