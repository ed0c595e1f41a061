import numpy as np
import pytest
from arch.unitroot import DFGLS, KPSS, PhillipsPerron, ZivotAndrews
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.tsa.stattools import adfuller

from tsecon.dataframe import Frame, MonthStamp, Series
from tsecon.errors import ExcessIntegration, InsufficientData, ZeroVariance
from tsecon.linreg import ols
from tsecon.unitroot import (
    UnitRootSpec, _ls_stat, _ls_stats_batch, adf, break_unit_root, dfgls, ers, kpss, long_run_variance,
    max_integration_order, pp, schwert_max_lag, unit_root,
)

from conftest import random_walk

TREND = {"constant": "c", "constant_trend": "ct"}


@pytest.fixture(scope="module")
def walk():
    rng = np.random.default_rng(3)
    return np.cumsum(rng.standard_normal(300)) + 0.02 * np.arange(300)


@pytest.fixture(scope="module")
def short_walk():
    return random_walk(np.random.default_rng(8), 90)


class TestSpec:
    @pytest.mark.parametrize("kw", [{"lags": -1}, {"max_lags": -2}, {"deterministic": "quadratic"},
                                    {"criterion": "bic"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            UnitRootSpec(**kw)

    @pytest.mark.parametrize("n, m", [(100, 12), (300, 15), (322, 16), (50, 10)])
    def test_schwert(self, n, m):
        assert schwert_max_lag(n) == m

    @pytest.mark.parametrize("kind", ["dfgls", "kpss", "ers"])
    def test_needs_deterministics(self, walk, kind):
        with pytest.raises(ValueError):
            unit_root(walk, kind, UnitRootSpec("none"))

    def test_short_and_constant(self):
        with pytest.raises(InsufficientData):
            adf(np.arange(5.0))
        with pytest.raises(ZeroVariance):
            adf(np.ones(50))


class TestAgainstReferenceImplementations:
    @pytest.mark.parametrize("det", ["none", "constant", "constant_trend"])
    @pytest.mark.parametrize("crit, autolag", [("sic", "BIC"), ("aic", "AIC")])
    def test_adf_lag_search(self, walk, det, crit, autolag):
        r = adf(walk, UnitRootSpec(det, criterion=crit))
        ref = adfuller(walk, maxlag=schwert_max_lag(walk.size), regression={"none": "n"}.get(det, TREND.get(det)),
                       autolag=autolag)
        assert r.statistic == pytest.approx(ref[0], abs=1e-9)
        assert r.extra["lags"] == ref[2]

    @pytest.mark.parametrize("det", ["constant", "constant_trend"])
    @pytest.mark.parametrize("L", [0, 4, 12])
    def test_pp_fixed_bandwidth(self, walk, det, L):
        r = pp(walk, UnitRootSpec(det, bandwidth=L))
        assert r.statistic == pytest.approx(PhillipsPerron(walk, lags=L, trend=TREND[det]).stat, abs=1e-9)

    @pytest.mark.parametrize("det", ["constant", "constant_trend"])
    @pytest.mark.parametrize("L", [0, 5, 14])
    def test_kpss_fixed_bandwidth(self, walk, det, L):
        r = kpss(walk, UnitRootSpec(det, bandwidth=L))
        assert r.statistic == pytest.approx(KPSS(walk, lags=L, trend=TREND[det]).stat, rel=1e-10)

    @pytest.mark.parametrize("det", ["constant", "constant_trend"])
    @pytest.mark.parametrize("p", [0, 3])
    def test_dfgls_fixed_lags(self, walk, det, p):
        r = dfgls(walk, UnitRootSpec(det, lags=p))
        assert r.statistic == pytest.approx(DFGLS(walk, lags=p, trend=TREND[det]).stat, abs=1e-9)

    @pytest.mark.parametrize("p", [0, 2])
    def test_zivot_andrews(self, walk, p):
        r = break_unit_root(walk, "zivot_andrews", lags=p)
        assert r.statistic == pytest.approx(ZivotAndrews(walk, lags=p, trend="ct", trim=0.15).stat, abs=1e-9)

    def test_pp_collapses_to_df(self, walk):
        for det in ("constant", "constant_trend"):
            a = adf(walk, UnitRootSpec(det, lags=0)).statistic
            b = pp(walk, UnitRootSpec(det, bandwidth=0)).statistic
            assert abs(a - b) < 1e-10


class TestLongRunVariance:
    def test_bartlett_loop(self, rng):
        u = rng.standard_normal(200)
        L = 6
        n = u.size
        ref = sum((1 - abs(j) / (L + 1)) * np.dot(u[abs(j):], u[: n - abs(j)]) / n for j in range(-L, L + 1))
        lam, got_L = long_run_variance(u, L)
        assert got_L == L and lam == pytest.approx(ref, rel=1e-12)

    def test_out_of_range(self, rng):
        with pytest.raises(ValueError):
            long_run_variance(rng.standard_normal(10), 10)


class TestInvariance:
    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(-100, 100), b=st.floats(0.01, 100), kind=st.sampled_from(["adf", "dfgls", "pp", "kpss", "ers"]))
    def test_location_scale(self, short_walk, a, b, kind):
        spec = UnitRootSpec("constant_trend", lags=2, bandwidth=3)
        s0 = unit_root(short_walk, kind, spec).statistic
        s1 = unit_root(a + b * short_walk, kind, spec).statistic
        assert s1 == pytest.approx(s0, rel=1e-9, abs=1e-9)


class TestErs:
    def test_orientation(self, walk):
        r = ers(walk, UnitRootSpec("constant_trend"))
        assert r.extra["rejects_below"] and r.lower_tail
        assert r.statistic > r.critical_values[0.05]
        hits = [ers(np.random.default_rng(s).standard_normal(300), UnitRootSpec("constant_trend")).rejects(0.05)
                for s in range(50)]
        assert np.mean(hits) >= 0.8


class TestBreaks:
    @pytest.fixture(scope="class")
    @staticmethod
    def shifted():
        rng = np.random.default_rng(21)
        n = 160
        e = np.zeros(n)
        for t in range(1, n):
            e[t] = 0.5 * e[t - 1] + rng.standard_normal()
        return e + 0.05 * np.arange(n) + 8.0 * (np.arange(n) >= 90)

    def test_za_grid_matches_independent_refits(self, shifted):
        p = 1
        r = break_unit_root(shifted, "zivot_andrews", lags=p)
        n = shifted.size
        dx = np.diff(shifted, prepend=np.nan)
        rows = np.arange(p + 1, n)
        stats = {}
        for tb in r.grid:
            tb = tb[0]
            du = (np.arange(n) >= tb).astype(float)
            dt = np.where(np.arange(n) >= tb, np.arange(n) - tb + 1.0, 0.0)
            X = np.column_stack([np.ones(rows.size), rows + 1.0, shifted[rows - 1], dx[rows - 1], du[rows], dt[rows]])
            stats[tb] = ols(dx[rows], X).tvalues[2]
        assert r.statistic == pytest.approx(min(stats.values()), abs=1e-10)
        assert r.break_index == (min(stats, key=lambda k: (stats[k], k)),)

    def test_detects_level_shift(self, shifted):
        r = break_unit_root(shifted, "zivot_andrews")
        assert abs(r.break_index[0] - 90) <= 2 and r.rejects(0.05)

    @pytest.mark.parametrize("model", ["crash", "break"])
    def test_ls_batch_equals_scalar(self, shifted, model):
        t2s = np.arange(70, 130)
        got = _ls_stats_batch(shifted, 40, t2s, 2, model)
        ref = [_ls_stat(shifted, (40, int(t2)), 2, model) for t2 in t2s]
        np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("kind", ["perron_io", "perron_ao", "zivot_andrews", "ls_crash", "ls_break"])
    def test_dates_inside_trimmed_interior(self, short_walk, kind):
        r = break_unit_root(Series("x", MonthStamp(2000, 1), short_walk), kind, lags=1)
        n = short_walk.size
        trim = 0.10 if kind.startswith("ls") else 0.15
        assert all(trim * n - 1 <= i <= (1 - trim) * n + 1 for i in r.break_index)
        assert r.statistic == min(r.grid.values())
        assert r.break_dates[0] == MonthStamp(2000, 1).shift(r.break_index[0])
        if kind.startswith("ls"):
            assert r.break_index[1] >= r.break_index[0] + 2

    def test_ties_go_to_earliest(self):
        x = np.tile([0.0, 1.0], 30) + np.repeat([0.0, 1.0], 30)
        r = break_unit_root(x, "perron_ao", lags=0)
        best = min(r.grid.values())
        tied = sorted(k for k, v in r.grid.items() if v == best)
        assert r.break_index == tied[0]

    def test_ls_break_critical_values_depend_on_location(self, shifted):
        r = break_unit_root(shifted, "ls_break", lags=1)
        assert r.critical_values[0.01] < r.critical_values[0.05] < r.critical_values[0.10]

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            break_unit_root(np.cumsum(np.ones(10) + np.arange(10) % 3), "zivot_andrews", trimming=0.1)


class TestIntegrationOrder:
    def _frame(self, *cols):
        return Frame([Series(f"v{i}", MonthStamp(2000, 1), c) for i, c in enumerate(cols)])

    def test_noise(self):
        rng = np.random.default_rng(0)
        assert max_integration_order(self._frame(rng.standard_normal(200), rng.standard_normal(200))) == 0

    def test_mixed(self):
        rng = np.random.default_rng(1)
        assert max_integration_order(self._frame(rng.standard_normal(200), np.cumsum(rng.standard_normal(200)))) == 1

    def test_twice_cumulated(self):
        rng = np.random.default_rng(0)
        assert max_integration_order(self._frame(np.cumsum(np.cumsum(rng.standard_normal(200))))) == 2

    def test_twice_cumulated_rate(self):
        # a sequence of 5% tests misclassifies a few percent of draws
        hits = [max_integration_order(self._frame(np.cumsum(np.cumsum(np.random.default_rng(s).standard_normal(200)))))
                == 2 for s in range(100)]
        assert np.mean(hits) >= 0.9

    def test_excess(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ExcessIntegration):
            max_integration_order(self._frame(np.cumsum(np.cumsum(np.cumsum(rng.standard_normal(200))))))


class TestAdfKpssDisagree:
    @pytest.mark.parametrize("process", ["walk", "noise"])
    def test_rejection_rates(self, process):
        rej_adf = rej_kpss = 0
        for seed in range(200):
            rng = np.random.default_rng(seed)
            e = rng.standard_normal(300)
            x = np.cumsum(e) if process == "walk" else e
            rej_adf += adf(x, UnitRootSpec("constant", lags=0)).rejects(0.05)
            rej_kpss += kpss(x, UnitRootSpec("constant")).rejects(0.05)
        # sizes within 5 points of nominal; the automatic bandwidth costs KPSS some power
        if process == "walk":
            assert abs(rej_adf / 200 - 0.05) <= 0.05 and rej_kpss / 200 >= 0.75
        else:
            assert rej_adf / 200 >= 0.95 and abs(rej_kpss / 200 - 0.05) <= 0.05
