from __future__ import annotations

import math

import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats import diagnostic as smd

from tsecon import criticalvalues as cv
from tsecon import diagnostics as dg
from tsecon.errors import ZeroVariance
from tsecon.linreg import ols

import oracles
from conftest import ar1


@pytest.fixture
def regression(rng):
    n = 200
    x = rng.standard_normal(n)
    z = rng.uniform(-1, 1, n)
    X = np.column_stack([np.ones(n), x, z])
    e = rng.standard_normal(n) * (1 + 0.8 * np.abs(x))
    y = X @ np.array([0.3, 1.0, -0.7]) + e
    return ols(y, X, ["c", "x", "z"])


class TestPortmanteau:
    @pytest.mark.parametrize("lags", [1, 5, 10])
    def test_ljung_box_against_sum(self, rng, lags):
        x = ar1(rng, 150, 0.3)
        r = dg.ljung_box(x, lags)
        assert r.statistic == pytest.approx(oracles.ljung_box_sum(x, lags), rel=1e-12)

    def test_ljung_box_statsmodels(self, rng):
        x = ar1(rng, 150, 0.3)
        ref = smd.acorr_ljungbox(x, lags=[10])
        r = dg.ljung_box(x, 10)
        assert r.statistic == pytest.approx(float(ref["lb_stat"].iloc[0]), rel=1e-12)
        assert r.p_value == pytest.approx(float(ref["lb_pvalue"].iloc[0]), rel=1e-9)

    def test_squared_variant(self, rng):
        x = rng.standard_normal(100)
        assert dg.ljung_box(x, 4, squared=True).statistic == pytest.approx(oracles.ljung_box_sum(x**2, 4))

    def test_constant_input(self):
        with pytest.raises(ZeroVariance):
            dg.ljung_box(np.ones(50), 5)


class TestArch:
    def test_statsmodels(self, rng):
        e = rng.standard_normal(300)
        r = dg.arch_lm(e, 5)
        lm, lmp, f, fp = smd.het_arch(e, nlags=5)
        assert r.statistic == pytest.approx(f, rel=1e-9)
        assert r.p_value == pytest.approx(fp, rel=1e-8)
        assert r.extra["lm"] == pytest.approx(lm, rel=1e-9)

    def test_detects_garch(self, rng):
        n = 1500
        e = np.zeros(n)
        h = np.ones(n)
        z = rng.standard_normal(n)
        for t in range(1, n):
            h[t] = 0.1 + 0.5 * e[t - 1] ** 2 + 0.3 * h[t - 1]
            e[t] = math.sqrt(h[t]) * z[t]
        assert dg.arch_lm(e, 4).p_value < 0.01


class TestBreuschGodfrey:
    @pytest.mark.parametrize("lags", [1, 3, 6])
    def test_statsmodels(self, regression, lags):
        r = dg.breusch_godfrey(regression, lags)
        res = sm.OLS(regression.y, regression.X).fit()
        lm, lmp, f, fp = smd.acorr_breusch_godfrey(res, nlags=lags)
        assert r.statistic == pytest.approx(f, rel=1e-8)
        assert r.extra["lm"] == pytest.approx(lm, rel=1e-8)

    def test_exact_fit(self):
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        with pytest.raises(ZeroVariance):
            dg.breusch_godfrey(ols(X @ [1.0, 2.0], X), 2)


class TestReset:
    def test_statsmodels(self, regression):
        r = dg.ramsey_reset(regression, (2,))
        res = sm.OLS(regression.y, regression.X).fit()
        ref = smd.linear_reset(res, power=2, use_f=True)
        assert r.statistic == pytest.approx(float(ref.fvalue), rel=1e-8)

    def test_exact_fit_is_zero(self):
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        assert dg.ramsey_reset(ols(X @ [1.0, 2.0], X)).statistic == 0.0


class TestHeteroskedasticity:
    def test_bpg_statsmodels(self, regression):
        r = dg.het_test(regression, "bpg")
        lm, lmp, f, fp = smd.het_breuschpagan(regression.residuals, regression.X)
        assert r.statistic == pytest.approx(f, rel=1e-9)
        assert r.extra["lm"] == pytest.approx(lm, rel=1e-9)

    def test_white_statsmodels(self, regression):
        r = dg.het_test(regression, "white")
        lm, lmp, f, fp = smd.het_white(regression.residuals, regression.X)
        assert r.statistic == pytest.approx(f, rel=1e-8)

    @pytest.mark.parametrize("kind,g", [("harvey", lambda e: np.log(e**2)), ("glejser", np.abs)])
    def test_aux_regression(self, regression, kind, g):
        r = dg.het_test(regression, kind)
        aux = sm.OLS(g(regression.residuals), regression.X).fit()
        assert r.statistic == pytest.approx(aux.fvalue, rel=1e-9)

    def test_detects_variance_in_x(self, regression):
        assert dg.het_test(regression, "white").p_value < 0.05

    def test_white_design_drops_duplicates(self):
        X = np.column_stack([np.ones(20), np.r_[np.ones(10), np.zeros(10)]])
        Z = dg.white_design(X)
        assert Z.shape[1] == 2


class TestCusum:
    def test_recursive_residuals_against_loop(self, regression):
        w = dg.recursive_residuals(regression)
        np.testing.assert_allclose(w, oracles.recursive_residuals_loop(regression.y, regression.X), rtol=1e-8)

    def test_statsmodels_recursive(self, regression):
        from statsmodels.stats.diagnostic import recursive_olsresiduals

        res = sm.OLS(regression.y, regression.X).fit()
        ref = recursive_olsresiduals(res)[4]
        w = dg.recursive_residuals(regression)
        np.testing.assert_allclose(w, ref[regression.k:], rtol=1e-8)

    def test_cusum_band_is_linear(self, regression):
        p = dg.cusum(regression, "cusum")
        m = regression.n - regression.k
        a = dg.CUSUM_A[0.05]
        assert p.upper_band[0] == pytest.approx(a * math.sqrt(m) + 2 * a / math.sqrt(m))
        assert p.upper_band[-1] == pytest.approx(3 * a * math.sqrt(m))
        np.testing.assert_allclose(p.lower_band, -p.upper_band)

    def test_cusumq_endpoints(self, regression):
        p = dg.cusum(regression, "cusumq")
        assert p.statistic_path[-1] == 1.0
        assert np.all(np.diff(p.statistic_path) >= 0)
        c0 = cv.cusumq_c0(regression.n - regression.k, 0.05)
        assert p.upper_band[-1] - 1.0 == pytest.approx(c0)

    def test_break_is_detected(self, rng):
        n = 200
        x = rng.standard_normal(n)
        X = np.column_stack([np.ones(n), x])
        y = np.where(np.arange(n) < 100, 1.0, 4.0) + x + 0.5 * rng.standard_normal(n)
        assert not dg.cusum(ols(y, X), "cusum").inside

    def test_csv_columns(self, regression, tmp_path):
        p = dg.cusum(regression, "cusum")
        path = tmp_path / "c.csv"
        p.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "step,statistic,lower,upper"
        assert len(lines) == p.steps.size + 1

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_cusumq_endpoint_identity(self, seed):
        r = np.random.default_rng(seed)
        n = 40
        X = np.column_stack([np.ones(n), r.standard_normal(n)])
        y = X @ [1.0, 0.5] + r.standard_normal(n)
        p = dg.cusum(ols(y, X), "cusumq")
        assert p.statistic_path[-1] == 1.0
        assert np.all((p.statistic_path >= 0) & (p.statistic_path <= 1.0 + 1e-12))
