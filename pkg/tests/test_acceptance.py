"""Acceptance criteria 1-9, one PASS/FAIL line each.

Criteria 1-6 and the variance-share part of 7 compare against published
numbers for the bundled monthly snapshot.  When that file is absent they
report FAIL (not run) and are skipped; everything else runs on synthetic data.
"""

import csv
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import REPRO_CONFIG, ROOT, SNAPSHOT
from test_varmodel import simulate_var
from tsecon import ardl
from tsecon import diagnostics as dg
from tsecon.cointegration import johansen
from tsecon.linreg import ols
from tsecon.pipeline import load_config, parse_config, run_pipeline
from tsecon.structural import fevd, historical_decomposition, impulse_response
from tsecon.unitroot import UnitRootSpec, adf, kpss
from tsecon.varmodel import fit_var, select_lag_order, toda_yamamoto

HAVE_SNAPSHOT = SNAPSHOT.is_file()
MISSING = f"not run: data snapshot {SNAPSHOT.relative_to(ROOT)} is not present"


@pytest.fixture
def report(capsys):
    def emit(n, checks, note=""):
        failed = [name for name, ok in checks if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = f" (failed: {', '.join(failed)})" if failed else ""
        with capsys.disabled():
            print(f"\ncriterion {n}: {status}{detail}{'; ' + note if note else ''}")
        assert not failed, failed
    return emit


def not_run(capsys, n, note=MISSING):
    with capsys.disabled():
        print(f"\ncriterion {n}: FAIL ({note})")
    pytest.skip(note)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def within(got, ref, tol):
    return got is not None and math.isfinite(got) and abs(got - ref) <= tol + 1e-12


def last_digit(text):
    """One unit in the last printed digit of a published number."""
    return 10.0 ** -len(text.split(".")[1]) if "." in text else 1.0


@pytest.fixture(scope="module")
def real_bundle(tmp_path_factory):
    if not HAVE_SNAPSHOT:
        return None
    return run_pipeline(load_config(REPRO_CONFIG), tmp_path_factory.mktemp("real"), SNAPSHOT)


TABLE1 = {
    "dlndubai": ["0.0051", "0.0813", "-0.9425", "5.2470", "115.06", "8.8135", "43.638", "84.835"],
    "dlngasus": ["0.0029", "0.1346", "0.08713", "4.1522", "18.164", "2.0392", "19.560", "23.135"],
}
TABLE1_COLS = ["mean", "std", "skewness", "kurtosis", "jarque_bera", "arch_10", "lb_10", "lb2_10"]


def test_criterion_1_descriptive_statistics(report, capsys, tmp_path):
    if not HAVE_SNAPSHOT:
        not_run(capsys, 1)
    doc = {"schema_version": 1, "data": {"path": str(SNAPSHOT), "columns": ["dubai", "gasus"]},
           "transforms": {"dlndubai": {"source": "dubai", "kind": "logdiff"},
                          "dlngasus": {"source": "gasus", "kind": "logdiff"}},
           "stages": ["describe"], "describe": {"series": ["dlndubai", "dlngasus"], "lags": 10}}
    t0 = time.perf_counter()
    b = run_pipeline(parse_config(doc), tmp_path)
    elapsed = time.perf_counter() - t0
    got = {r["series"]: r for r in rows(b.path("table1.csv"))}
    checks = [(f"{s}.{c}", within(float(got[s][c]), float(v), last_digit(v)))
              for s, vals in TABLE1.items() for c, v in zip(TABLE1_COLS, vals)]
    checks.append(("runtime < 1 s", elapsed < 1.0))
    report(1, checks, f"{elapsed:.2f} s")


def test_criterion_2_lag_selection(report, capsys):
    if not HAVE_SNAPSHOT:
        not_run(capsys, 2)
    from tsecon.dataframe import load_csv, transform

    raw = load_csv(SNAPSHOT, "date", ["dubai", "gasus"])
    frame = [transform(raw[c], "log").rename("ln" + c) for c in ("dubai", "gasus")]
    from tsecon.dataframe import Frame

    t0 = time.perf_counter()
    tab = select_lag_order(Frame.align(frame), 12, "const_trend")
    elapsed = time.perf_counter() - t0
    checks = [
        ("lag-0 logL", within(float(tab.loglik[0]), -305.8749, 5e-5)),
        ("lag-0 AIC", within(float(tab.aic[0]), 1.999193, 5e-5)),
        ("AIC -> 3", tab.selected["aic"] == 3), ("FPE -> 3", tab.selected["fpe"] == 3),
        ("SC -> 2", tab.selected["sc"] == 2), ("HQ -> 2", tab.selected["hq"] == 2),
        ("LR -> 11", tab.selected["lr"] == 11), ("runtime < 5 s", elapsed < 5.0),
    ]
    report(2, checks, f"{elapsed:.2f} s")


TABLE5 = {"lngasus(-1)": 0.9432, "lndubai": 0.2802, "lndubai(-1)": -0.3194, "lndubai(-2)": 0.3189,
          "lndubai(-3)": -0.1899, "lndubai(-4)": 0.0345, "lndubai(-5)": -0.2550, "lndubai(-6)": 0.3815,
          "lndubai(-7)": -0.2319}
TABLE6 = {"D(lndubai)": 0.2802, "D(lndubai(-1))": -0.0580, "D(lndubai(-2))": 0.2608, "D(lndubai(-3))": 0.0709,
          "D(lndubai(-4))": 0.1054, "D(lndubai(-5))": -0.1495, "D(lndubai(-6))": 0.2319, "CointEq(-1)": -0.0567}


def _identity_checks(fit):
    e = ardl.ecm_representation(fit)
    ident = ardl.ecm_identity_coefficients(fit)
    lf = fit.levels_fit
    a = sum(lf.coef(f"{fit.y_name}(-{j})") for j in range(1, fit.spec.p + 1))
    ok_pi = all(
        abs(fit.long_run().coef(v) - sum(lf.coef(v if j == 0 else f"{v}(-{j})") for j in range(fit.spec.q[i] + 1))
            / (1 - a)) < 1e-8 for i, v in enumerate(fit.x_names))
    ok_ecm = all(abs(e.coef(k) - v) < 1e-8 for k, v in ident.items())
    ok_ec = abs(e.coef("CointEq(-1)") + (1 - a)) < 1e-8
    return [("pi formula", ok_pi), ("ECM partial sums", ok_ecm), ("ec = -(1 - sum a)", ok_ec)]


def test_criterion_3_ardl_tables(report, capsys, real_bundle):
    checks = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(250).cumsum()
        y = 0.4 * x + rng.standard_normal(250)
        for case in ardl.CASES:
            checks += [(f"{name} [seed {seed}, {case}]", ok)
                       for name, ok in _identity_checks(ardl.fit_ardl(y, x, 4, 4, case=case))]
    if not HAVE_SNAPSHOT:
        ok = all(c for _, c in checks)
        not_run(capsys, 3, f"identities {'PASS' if ok else 'FAIL'} on synthetic data; table values {MISSING}")
    t5 = {r["variable"]: float(r["coefficient"]) for r in rows(real_bundle.path("table5.csv"))
          if r["model"] == "lngasus|lndubai" and r["section"] == "levels"}
    t6 = {r["variable"]: float(r["coefficient"]) for r in rows(real_bundle.path("table6.csv"))
          if r["model"] == "lngasus|lndubai"}
    order = real_bundle.manifest["resolved"]["ardl.order[lngasus|lndubai]"]
    checks.append(("ARDL(1,7) selected", order == "ARDL(1,7)"))
    checks.append(("lngasus(-1)", within(t5.get("lngasus(-1)"), 0.9432, 0.002)))
    checks += [(f"table5 {k}", within(t5.get(k), v, 0.005)) for k, v in TABLE5.items()]
    checks += [(f"table6 {k}", within(t6.get(k), v, 0.005)) for k, v in TABLE6.items()]
    checks.append(("ec coefficient", within(t6.get("CointEq(-1)"), -0.0567, 0.001)))
    report(3, checks)


def test_criterion_4_bounds(report, capsys, real_bundle):
    if not HAVE_SNAPSHOT:
        not_run(capsys, 4)
    t = {(r["model"], r["test"]): r for r in rows(real_bundle.path("table5_tests.csv"))}
    fwd_f, fwd_t = t[("lngasus|lndubai", "bounds_f")], t[("lngasus|lndubai", "bounds_t")]
    rev_f = t[("lndubai|lngasus", "bounds_f")]
    checks = [
        ("F", within(float(fwd_f["statistic"]), 5.0529, 0.05)),
        ("t", within(float(fwd_t["statistic"]), -3.1652, 0.02)),
        ("reverse F", within(float(rev_f["statistic"]), 0.4036, 0.02)),
        ("F band", (float(fwd_f["bound_lower"]), float(fwd_f["bound_upper"])) == (3.15, 4.11)),
        ("t band", (float(fwd_t["bound_lower"]), float(fwd_t["bound_upper"])) == (-1.95, -2.6)),
        ("forward verdict", fwd_f["detail"] == "cointegrated"),
        ("reverse verdict", rev_f["detail"] == "not_cointegrated"),
    ]
    report(4, checks)


def test_criterion_5_block_exogeneity(report, capsys, real_bundle):
    if not HAVE_SNAPSHOT:
        not_run(capsys, 5)
    t = {(r["dependent"], r["excluded"]): r for r in rows(real_bundle.path("table7.csv"))}
    fwd, rev = t[("lngasus", "lndubai")], t[("lndubai", "lngasus")]
    checks = [
        ("lndubai -> lngasus chi2", within(float(fwd["chi2"]), 13.530, 0.05)),
        ("lndubai -> lngasus p", within(float(fwd["p_value"]), 0.0036, 0.0005)),
        ("lngasus -> lndubai chi2", within(float(rev["chi2"]), 0.5428, 0.02)),
        ("lngasus -> lndubai p", within(float(rev["p_value"]), 0.9094, 0.005)),
        ("df = 3", fwd["df"] == "3" and rev["df"] == "3"),
    ]
    report(5, checks)


# statistic, 5% star
TABLE2 = {
    "lndubai": {"adf": (-2.42, 0), "dfgls": (-2.40, 0), "pp": (-2.02, 0), "kpss": (0.26, 1), "ers": (7.83, 0),
                "perron_io": (-4.20, 0), "perron_ao": (-4.18, 0), "zivot_andrews": (-4.18, 0),
                "ls_crash": (-2.94, 0), "ls_break": (-5.01, 0)},
    "lngasus": {"adf": (-2.74, 0), "dfgls": (-2.06, 0), "pp": (-2.80, 0), "kpss": (0.44, 1), "ers": (11.2, 0),
                "perron_io": (-5.12, 0), "perron_ao": (-4.36, 0), "zivot_andrews": (-5.14, 0),
                "ls_crash": (-3.39, 0), "ls_break": (-6.07, 1)},
    "dlndubai": {"adf": (-13.4, 1), "dfgls": (-13.2, 1), "pp": (-13.2, 1), "kpss": (0.06, 0), "ers": (0.64, 1),
                 "perron_io": (-14.0, 1), "perron_ao": (-14.1, 1), "zivot_andrews": (-13.7, 1),
                 "ls_crash": (-12.6, 1), "ls_break": (-13.2, 1)},
    "dlngasus": {"adf": (-16.9, 1), "dfgls": (-16.1, 1), "pp": (-16.9, 1), "kpss": (0.02, 0), "ers": (0.61, 1),
                 "perron_io": (-17.3, 1), "perron_ao": (-17.4, 1), "zivot_andrews": (-17.0, 1),
                 "ls_crash": (-8.02, 1), "ls_break": (-11.4, 1)},
}
# residual tests: tau, p of tau, p of z
TABLE4_RESIDUAL = {("engle_granger", "lndubai"): (-2.9371, 0.0330, 0.0481),
                   ("engle_granger", "lngasus"): (-3.0788, 0.0227, 0.0335),
                   ("phillips_ouliaris", "lndubai"): (-2.9055, 0.0358, 0.0531),
                   ("phillips_ouliaris", "lngasus"): (-3.0692, 0.0233, 0.0349)}
TABLE4_JOHANSEN = {("r<=0", "trace"): 10.989, ("r<=1", "trace"): 0.2893,
                   ("r<=0", "max_eigen"): 10.699, ("r<=1", "max_eigen"): 0.2893}
TABLE4_GH = {
    "lndubai": {"break_level": ((-5.20, 1), (-5.34, 1), (-44.42, 1)),
                "break_regime": ((-4.97, 1), (-5.08, 1), (-40.70, 0)),
                "break_regime_trend": ((-4.43, 0), (-4.80, 0), (-31.72, 0))},
    "lngasus": {"break_level": ((-5.61, 1), (-5.65, 1), (-50.38, 1)),
                "break_regime": ((-5.77, 1), (-5.91, 1), (-54.41, 1)),
                "break_regime_trend": ((-6.05, 1), (-6.27, 1), (-63.94, 1))},
}


def test_criterion_6_unit_root_and_cointegration_decisions(report, capsys, real_bundle):
    if not HAVE_SNAPSHOT:
        not_run(capsys, 6)
    checks = []
    t2 = {(r["series"], r["test"]): r for r in rows(real_bundle.path("table2.csv"))}
    for s, tests in TABLE2.items():
        for test, (stat, star) in tests.items():
            r = t2[(s, test)]
            checks.append((f"{s} {test} stat", within(float(r["statistic"]), stat, 0.15)))
            checks.append((f"{s} {test} decision", (r["reject_5pct"] == "true") == bool(star)))
    t4 = rows(real_bundle.path("table4.csv"))
    res = {(r["test"], r["subject"], r["statistic_name"]): r for r in t4 if r["panel"] == "residual"}
    for (kind, dep), (tau, p_tau, p_z) in TABLE4_RESIDUAL.items():
        r_tau, r_z = res[(kind, dep, "tau")], res[(kind, dep, "z")]
        checks.append((f"{kind} {dep} tau", within(float(r_tau["statistic"]), tau, 0.15)))
        checks.append((f"{kind} {dep} tau decision", (r_tau["reject_5pct"] == "true") == (p_tau < 0.05)))
        checks.append((f"{kind} {dep} z decision", (float(r_z["p_value"]) < 0.05) == (p_z < 0.05)))
    joh = {(r["subject"], r["statistic_name"]): r for r in t4 if r["panel"] == "johansen"}
    for key, stat in TABLE4_JOHANSEN.items():
        checks.append((f"johansen {key}", within(float(joh[key]["statistic"]), stat, 0.5)))
        checks.append((f"johansen {key} decision", joh[key]["reject_5pct"] == "false"))
    gh = {(r["subject"], r["test"], r["statistic_name"]): r for r in t4 if r["panel"] == "gregory_hansen"}
    for dep, models in TABLE4_GH.items():
        for model, triple in models.items():
            for name, (stat, star) in zip(("adf", "zt", "za"), triple):
                r = gh[(dep, model, name)]
                checks.append((f"GH {dep} {model} {name} decision", (r["reject_5pct"] == "true") == bool(star)))
                if dep == "lngasus" and model == "break_regime_trend":
                    checks.append((f"GH {dep} {model} {name}", within(float(r["statistic"]), stat, 0.15)))
    report(6, checks)


def test_criterion_7_structural(report, capsys, real_bundle):
    rng = np.random.default_rng(7)
    A = [np.array([[0.5, 0.1], [0.3, 0.4]]), np.array([[0.1, 0.0], [-0.1, 0.1]])]
    Y = simulate_var(rng, A, 300, const=[0.2, -0.1])
    f = fit_var(Y, 2)
    tab = fevd(f, 24, ["y0", "y1"])
    hd = historical_decomposition(f)
    irf = impulse_response(f, 12, "cholesky", ["y1", "y0"], bands="none")
    impact = irf.responses[:, :, 0].T[np.ix_([1, 0], [0, 1])]
    D = simulate_var(rng, [np.diag([0.6, 0.3])], 200)
    g = fit_var(D, 1, "none")
    g = g.__class__(**{**g.__dict__, "coefs": np.array([np.diag([0.6, 0.3])]), "sigma_dfadj": np.diag([1.0, 2.0])})
    diag_irf = impulse_response(g, 24, "cholesky", ["y0", "y1"], bands="none")
    checks = [
        ("FEVD rows sum to 1", np.max(np.abs(tab.shares.sum(axis=2) - 1)) <= 1e-10),
        ("FEVD nonnegative", bool(np.all(tab.shares >= 0))),
        ("HD additivity", np.max(np.abs(hd.reconstruct() - hd.observed)) <= 1e-8),
        ("Cholesky impact lower-triangular", bool(np.all(np.triu(impact, 1) == 0.0))),
        ("diagonal VAR cross-IRFs zero", bool(np.all(diag_irf.response("y0", "y1") == 0)
                                               and np.all(diag_irf.response("y1", "y0") == 0))),
    ]
    if not HAVE_SNAPSHOT:
        ok = all(c for _, c in checks)
        not_run(capsys, 7, f"identities {'PASS' if ok else 'FAIL'} on synthetic data; lndubai variance share "
                           f"{MISSING}")
    sh = [r for r in rows(real_bundle.path("fig5_fevd.csv"))
          if r["variable"] == "lngasus" and r["shock"] == "lndubai"]
    share = float(max(sh, key=lambda r: int(r["horizon"]))["share"])
    checks.append(("long-run lndubai share in [0.13, 0.23]", 0.13 <= share <= 0.23))
    report(7, checks, f"share {share:.3f}")


def test_criterion_8_property_suites(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    X = np.column_stack([np.ones(120), rng.standard_normal((120, 3))])
    y = X @ [1.0, -2.0, 0.5, 0.0] + rng.standard_normal(120)
    fit = ols(y, X)
    scaled = ols(3.0 * y, X * [1.0, 2.0, 0.5, 4.0])
    W = rng.standard_normal((200, 3)).cumsum(axis=0)
    j = johansen(W, 2, "unrestricted_constant")
    w = dg.recursive_residuals(fit)
    checks = [
        ("OLS orthogonality", np.max(np.abs(X.T @ fit.residuals)) < 1e-9 * np.abs(y).sum()),
        ("OLS scale equivariance", np.allclose(scaled.coefficients, 3.0 * fit.coefficients / [1.0, 2.0, 0.5, 4.0],
                                               rtol=1e-10, atol=1e-12)),
        ("trace/max-eigen telescoping", np.allclose(j.trace[:-1] - j.trace[1:], j.max_eigen[:-1], atol=1e-10)
         and abs(j.trace[-1] - j.max_eigen[-1]) < 1e-12),
        ("TY df = k", all(r.distribution == f"chi2({k})" for k in (1, 2, 4)
                          for r in toda_yamamoto(W, k, 1).wald.values())),
        ("CUSUMQ endpoint", abs(np.sum(w**2) - fit.ssr) < 1e-9 * fit.ssr
         and dg.cusum(fit, "cusumq").statistic_path[-1] == 1.0),
    ]
    rej = np.zeros(4)
    for seed in range(200):
        r = np.random.default_rng(seed)
        e = r.standard_normal(300)
        rej[0] += adf(np.cumsum(e), UnitRootSpec("constant")).rejects(0.05)
        rej[1] += kpss(e, UnitRootSpec("constant")).rejects(0.05)
        ty = toda_yamamoto(simulate_var(r, [np.diag([0.6, 0.4])], 200), 2, 1)
        rej[2] += ty.causes("y0", "y1")
        rej[3] += ty.causes("y1", "y0")
    size = rej / 200
    elapsed = time.perf_counter() - t0
    checks += [(f"{name} size {s:.3f}", abs(s - 0.05) <= 0.05)
               for name, s in zip(("ADF", "KPSS", "TY y0->y1", "TY y1->y0"), size)]
    checks.append(("runtime < 2 min", elapsed < 120))
    report(8, checks, f"sizes {np.round(size, 3).tolist()}, {elapsed:.0f} s")


def _run_cli(out, threads, data):
    env = {**os.environ, "OMP_NUM_THREADS": str(threads), "OPENBLAS_NUM_THREADS": str(threads),
           "MKL_NUM_THREADS": str(threads)}
    cmd = [sys.executable, "-m", "tsecon.cli", "run", str(REPRO_CONFIG), "--output", str(out), "--data", str(data)]
    t0 = time.perf_counter()
    r = subprocess.run(cmd, env=env, capture_output=True, text=True, timeout=600)
    return r, time.perf_counter() - t0


def test_criterion_9_determinism(report, tmp_path, pair_csv):
    data = SNAPSHOT if HAVE_SNAPSHOT else pair_csv
    runs = [_run_cli(tmp_path / f"run{i}", threads, data) for i, threads in enumerate((1, 1, 4))]
    names = sorted(p.name for p in (tmp_path / "run0").iterdir())
    same = all(sorted(p.name for p in (tmp_path / f"run{i}").iterdir()) == names for i in (1, 2)) and all(
        (tmp_path / "run0" / n).read_bytes() == (tmp_path / f"run{i}" / n).read_bytes() for i in (1, 2) for n in names)
    checks = [
        ("exit codes", all(r.returncode == 0 for r, _ in runs)),
        ("byte-identical across runs and thread counts", same),
        ("runtime < 60 s", max(t for _, t in runs) < 60),
    ]
    note = f"{len(names)} files, slowest run {max(t for _, t in runs):.1f} s"
    report(9, checks, note + ("" if HAVE_SNAPSHOT else "; synthetic data (snapshot not present)"))
