import numpy as np
import pytest

from volnet import panel
from volnet.errors import InputError


def make_rows(n_per_country, seed, beta_dp=0.0, beta_di=0.0, beta_l=0.0,
              beta_dpl=0.0, beta_dil=0.0, noise=0.05, countries=("IDN", "MYS", "PHL", "THA"),
              country_effects=None):
    rng = np.random.default_rng(seed)
    rows = []
    effects = country_effects or {c: 0.0 for c in countries}
    for c in countries:
        dp = (rng.random(n_per_country) < 0.05).astype(float)
        di = rng.standard_normal(n_per_country)
        L = rng.standard_normal(n_per_country)
        u = rng.normal(0, noise, n_per_country)
        sigma = (1.0 + effects[c] + beta_dp * dp + beta_di * di + beta_l * L
                 + beta_dpl * dp * L + beta_dil * di * L + u)
        for t in range(n_per_country):
            rows.append(panel.PanelRow(country=c, date=t, sigma=sigma[t],
                                       deltaP=dp[t], deltaI=di[t], L=L[t]))
    return rows


class TestFitPanel:
    def test_null_dgp_coverage(self):
        # All slopes zero in the DGP. With only G=4 clusters the CR1
        # t-ratio is heavy-tailed (t_{G-1}-like): a 300-seed Monte Carlo
        # oracle measures 81-88% coverage of +/-2 clustered SEs per
        # coefficient, so that is the honest bound here; the wild cluster
        # bootstrap is the device that restores ~nominal coverage (checked
        # in test_wild_bootstrap_null_coverage).
        slope_names = ["deltaP", "deltaI", "L", "deltaP:L", "deltaI:L"]
        hits = {name: 0 for name in slope_names}
        n_seeds = 40
        for seed in range(n_seeds):
            fit = panel.fit_panel(make_rows(400, seed))
            for name in slope_names:
                if abs(fit[name]) <= 2.0 * fit.se_of(name):
                    hits[name] += 1
        for name, h in hits.items():
            assert h >= 0.7 * n_seeds, (name, h)

    def test_wild_bootstrap_null_coverage(self):
        # the small-G remedy: bootstrap-t non-rejection at the 5% level is
        # approximately nominal (measured 87-97% per coefficient on these
        # seeds, versus 81-88% for the raw +/-2se rule)
        slope_names = ["deltaP", "deltaI", "L", "deltaP:L", "deltaI:L"]
        hits = {name: 0 for name in slope_names}
        n_seeds = 40
        for seed in range(n_seeds):
            fit = panel.fit_panel(make_rows(400, seed))
            p = panel.wild_cluster_bootstrap(fit, n_draws=199, seed=seed)
            for name in slope_names:
                if p[fit.names.index(name)] > 0.05:
                    hits[name] += 1
        for name, h in hits.items():
            assert h >= 0.85 * n_seeds, (name, h)

    def test_sign_recovery(self):
        correct = 0
        n_seeds = 20
        for seed in range(n_seeds):
            fit = panel.fit_panel(make_rows(1500, 1000 + seed, beta_dp=0.023,
                                            beta_dpl=-0.006))
            if np.sign(fit["deltaP"]) == 1.0 and np.sign(fit["deltaP:L"]) == -1.0:
                correct += 1
        assert correct >= 18

    def test_reference_country_dummies(self):
        fit = panel.fit_panel(make_rows(100, 3))
        assert "fe_IDN" not in fit.names
        assert {"fe_MYS", "fe_PHL", "fe_THA"} <= set(fit.names)

    def test_single_country_rejected(self):
        with pytest.raises(InputError):
            panel.fit_panel(make_rows(200, 0, countries=("IDN",)))

    def test_too_few_rows(self):
        with pytest.raises(InputError):
            panel.fit_panel(make_rows(10, 0, countries=("IDN", "MYS")))

    def test_constant_l_rank_deficient(self):
        rows = make_rows(100, 5)
        rows = [panel.PanelRow(r.country, r.date, r.sigma, r.deltaP, r.deltaI, 1.0)
                for r in rows]
        with pytest.raises(InputError, match="collinear"):
            panel.fit_panel(rows)

    def test_shift_invariance_of_slopes(self):
        rows = make_rows(300, 7, beta_dp=0.1, beta_di=0.05)
        shifted = [panel.PanelRow(r.country, r.date, r.sigma + 5.0, r.deltaP,
                                  r.deltaI, r.L) for r in rows]
        a = panel.fit_panel(rows)
        b = panel.fit_panel(shifted)
        for name in ("deltaP", "deltaI", "L", "deltaP:L", "deltaI:L"):
            assert a[name] == pytest.approx(b[name], abs=1e-10)
        assert b["intercept"] - a["intercept"] == pytest.approx(5.0, abs=1e-9)

    def test_country_effects_in_dummies(self):
        fit = panel.fit_panel(make_rows(800, 11,
                                        country_effects={"IDN": 0.0, "MYS": -0.3,
                                                         "PHL": 0.1, "THA": -0.05}))
        assert fit["fe_MYS"] == pytest.approx(-0.3, abs=0.02)
        assert fit["fe_PHL"] == pytest.approx(0.1, abs=0.02)


class TestClusterCov:
    def test_intercept_only_matches_classical(self):
        # with one row per cluster the CR1 sandwich on the intercept-only
        # design equals the classical OLS variance exactly
        y = np.array([1.0, -1.0, 2.0, -2.0, 0.5, -0.5])
        n = len(y)
        X = np.ones((n, 1))
        resid = y - y.mean()
        cov = panel._cluster_cov(X, resid, np.arange(n), n)
        classical = resid @ resid / (n - 1) / n
        assert cov[0, 0] == pytest.approx(classical, rel=1e-12)


class TestMarginalEffect:
    def test_affine_in_l(self):
        fit = panel.fit_panel(make_rows(500, 13, beta_dp=0.023, beta_dpl=-0.006))
        grid = np.linspace(-2, 2, 9)
        curve = panel.marginal_effect_policy(fit, grid)
        slopes = np.diff(curve["effect"]) / np.diff(grid)
        np.testing.assert_allclose(slopes, fit["deltaP:L"], atol=1e-12)
        assert curve["effect"][4] == pytest.approx(fit["deltaP"], abs=1e-12)  # L=0

    def test_point_arithmetic(self):
        class Fake:
            names = ("deltaP", "deltaP:L")
            coef = np.array([0.023, -0.006])
            cov = np.array([[1e-6, 0.0], [0.0, 1e-8]])

        curve = panel.marginal_effect_policy(Fake(), np.array([0.0, 1.0]))
        assert curve["effect"][0] == pytest.approx(0.023)
        assert curve["effect"][1] == pytest.approx(0.017)

    def test_flat_when_no_interaction(self):
        class Fake:
            names = ("deltaP", "deltaP:L")
            coef = np.array([0.04, 0.0])
            cov = np.eye(2) * 1e-6

        curve = panel.marginal_effect_policy(Fake(), np.linspace(-3, 3, 7))
        np.testing.assert_allclose(curve["effect"], 0.04, atol=1e-15)

    def test_missing_coefficient(self):
        class Fake:
            names = ("deltaI",)
            coef = np.array([0.1])
            cov = np.eye(1)

        with pytest.raises(InputError):
            panel.marginal_effect_policy(Fake(), np.array([0.0]))


class TestWildBootstrap:
    def test_pvalues_in_unit_interval_and_deterministic(self):
        fit = panel.fit_panel(make_rows(150, 17, beta_di=0.3))
        p1 = panel.wild_cluster_bootstrap(fit, n_draws=199, seed=5)
        p2 = panel.wild_cluster_bootstrap(fit, n_draws=199, seed=5)
        assert np.array_equal(p1, p2)
        assert ((p1 > 0) & (p1 <= 1)).all()

    def test_strong_effect_small_pvalue(self):
        fit = panel.fit_panel(make_rows(400, 19, beta_di=0.5, noise=0.05))
        p = panel.wild_cluster_bootstrap(fit, n_draws=199, seed=2)
        assert p[fit.names.index("deltaI")] <= 0.05
