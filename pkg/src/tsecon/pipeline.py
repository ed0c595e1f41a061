"""Declarative pipeline: YAML config in, a directory of CSV/JSON artifacts out.

A config is validated against a versioned schema where unknown keys are errors.
Each stage writes its own tables.  A failing stage is recorded in the report
with its id and does not stop the stages after it.  Numeric cells are written
with 10 significant digits so repeated runs are byte-identical.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import __version__
from . import ardl as ardl_mod
from . import cointegration as coint
from . import diagnostics as diag
from . import unitroot as ur
from . import varmodel as vm
from .dataframe import Frame, Series, describe, load_csv, transform
from .errors import ConfigError, TsEconError
from .linreg import TestResult
from .structural import fevd, historical_decomposition, impulse_response

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "TSECON_OUTPUT_ROOT"
STAGES = ("describe", "unit_roots", "var_lags", "cointegration", "ardl", "causality", "structural")

_REQUIRED = object()
_TRANSFORMS = ("level", "log", "diff", "logdiff")

# section -> key -> default (``_REQUIRED`` marks mandatory keys)
SCHEMA: dict[str, dict[str, Any]] = {
    "data": {"path": None, "url": None, "date_column": "date", "columns": None},
    "describe": {"series": _REQUIRED, "lags": 10},
    "unit_roots": {
        "series": _REQUIRED,
        "tests": list(ur.KINDS),
        "break_tests": list(ur.BREAK_KINDS),
        "level_deterministic": "constant_trend",
        "difference_deterministic": "constant",
        "differenced": [],
        "criterion": "sic",
        "max_lags": None,
        "bandwidth": "auto",
    },
    "var_lags": {"variables": _REQUIRED, "max_lag": 12, "deterministics": "const_trend"},
    "cointegration": {
        "variables": _REQUIRED,
        "residual_tests": list(coint.RESIDUAL_KINDS),
        "residual_deterministic": "c",
        "johansen_case": "unrestricted_constant",
        "johansen_lags": 2,
        "gregory_hansen": ["break_level", "break_regime", "break_regime_trend"],
        "criterion": "sic",
    },
    "ardl": {
        "dependent": _REQUIRED,
        "regressors": _REQUIRED,
        "max_p": 8,
        "max_q": 8,
        "criterion": "aic",
        "case": "unrestricted_const",
        "hac": True,
        "bounds_source": "pesaran_asymptotic",
        "reference_bands": None,
        "reverse": True,
        "serial_lags": 6,
        "arch_lags": 10,
        "reset_powers": [2],
        "cusum_level": 0.05,
    },
    "causality": {
        "variables": _REQUIRED,
        "k": "auto",
        "d_max": "auto",
        "deterministics": "const",
        "portmanteau_lags": 7,
    },
    "structural": {
        "variables": _REQUIRED,
        "p": "auto",
        "deterministics": "const",
        "horizon": 24,
        "ordering": None,
        "irf_method": "cholesky",
        "hd_method": "generalized",
        "bands": "analytic",
        "replications": 1000,
    },
}
_TOP = {"schema_version", "seed", "output_dir", "stages", "data", "transforms", *STAGES}


def _check_keys(where: str, given: dict, allowed) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


@dataclass(frozen=True)
class PipelineConfig:
    """Validated pipeline settings with every default filled in.

    ``base_dir`` anchors relative data paths; ``raw`` is the snapshot written
    to the manifest.
    """

    seed: int
    output_dir: str
    stages: tuple[str, ...]
    data: dict
    transforms: dict
    sections: dict
    base_dir: Path = field(default=Path("."), compare=False)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def section(self, name: str) -> dict:
        return self.sections[name]

    def data_path(self) -> Path | None:
        p = self.data.get("path")
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else (self.base_dir / p).resolve()


def parse_config(doc: dict, base_dir: Path | str = ".") -> PipelineConfig:
    """Validate a config mapping and fill in defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    if "config" in doc and "files" in doc:
        # a manifest: re-run from its snapshot
        return parse_config(doc["config"], base_dir)
    _check_keys("config", doc, _TOP)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    stages = tuple(doc.get("stages", [s for s in STAGES if s in doc]))
    bad = [s for s in stages if s not in STAGES]
    if bad:
        raise ConfigError(f"unknown stage(s): {', '.join(bad)}")
    if not stages:
        raise ConfigError("no stages selected")

    data = dict(doc.get("data") or {})
    _check_keys("data", data, SCHEMA["data"])
    data = {**SCHEMA["data"], **data}
    if (data["path"] is None) == (data["url"] is None):
        raise ConfigError("data needs exactly one of 'path' or 'url'")

    transforms = {}
    for name, spec in (doc.get("transforms") or {}).items():
        if not isinstance(spec, dict):
            raise ConfigError(f"transform {name!r} must be a mapping with 'source' and 'kind'")
        _check_keys(f"transforms.{name}", spec, ("source", "kind"))
        if "source" not in spec:
            raise ConfigError(f"transform {name!r} lacks 'source'")
        kind = spec.get("kind", "level")
        if kind not in _TRANSFORMS:
            raise ConfigError(f"transform {name!r}: kind must be one of {_TRANSFORMS}")
        transforms[str(name)] = {"source": str(spec["source"]), "kind": kind}

    sections = {}
    for st in STAGES:
        given = doc.get(st)
        if given is None:
            if st in stages:
                raise ConfigError(f"stage {st!r} selected but section missing")
            continue
        if not isinstance(given, dict):
            raise ConfigError(f"section {st!r} must be a mapping")
        _check_keys(st, given, SCHEMA[st])
        merged = {}
        for key, default in SCHEMA[st].items():
            if key in given:
                merged[key] = given[key]
            elif default is _REQUIRED:
                raise ConfigError(f"{st}.{key} is required")
            else:
                merged[key] = copy.deepcopy(default)
        sections[st] = merged
    _validate_sections(sections)

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    out = doc.get("output_dir", "bundle")
    raw = copy.deepcopy(doc)
    return PipelineConfig(seed, str(out), stages, data, transforms, sections, Path(base_dir), raw)


def _validate_sections(sections: dict) -> None:
    def one_of(st, key, allowed):
        v = sections[st][key]
        if v not in allowed:
            raise ConfigError(f"{st}.{key} must be one of {sorted(allowed)}, got {v!r}")

    def subset(st, key, allowed):
        v = sections[st][key]
        if not isinstance(v, list) or any(x not in allowed for x in v):
            raise ConfigError(f"{st}.{key} must be a list drawn from {sorted(allowed)}")

    def auto_int(st, key):
        v = sections[st][key]
        if v != "auto" and not (isinstance(v, int) and v >= 0):
            raise ConfigError(f"{st}.{key} must be 'auto' or a nonnegative integer")

    if "unit_roots" in sections:
        subset("unit_roots", "tests", ur.KINDS)
        subset("unit_roots", "break_tests", ur.BREAK_KINDS)
        one_of("unit_roots", "level_deterministic", ur.DETERMINISTICS)
        one_of("unit_roots", "difference_deterministic", ur.DETERMINISTICS)
        one_of("unit_roots", "criterion", ("sic", "aic", "hq"))
    if "var_lags" in sections:
        one_of("var_lags", "deterministics", vm.DETERMINISTICS)
    if "cointegration" in sections:
        subset("cointegration", "residual_tests", coint.RESIDUAL_KINDS)
        subset("cointegration", "gregory_hansen", coint.GH_MODELS)
        one_of("cointegration", "residual_deterministic", ("n", "c", "ct"))
        one_of("cointegration", "johansen_case", coint.JOHANSEN_CASES)
    if "ardl" in sections:
        one_of("ardl", "case", ardl_mod.CASES)
        one_of("ardl", "criterion", ("aic", "sc", "hq"))
        one_of("ardl", "bounds_source", ("pesaran_asymptotic", "narayan_small_sample"))
        bands = sections["ardl"]["reference_bands"]
        if bands is not None:
            if not isinstance(bands, dict) or set(bands) - {"level", "f", "t"} or "f" not in bands:
                raise ConfigError("ardl.reference_bands needs 'f' and optionally 't' and 'level'")
    if "causality" in sections:
        auto_int("causality", "k")
        auto_int("causality", "d_max")
        one_of("causality", "deterministics", vm.DETERMINISTICS)
    if "structural" in sections:
        auto_int("structural", "p")
        one_of("structural", "deterministics", vm.DETERMINISTICS)
        one_of("structural", "irf_method", ("cholesky", "generalized"))
        one_of("structural", "hd_method", ("cholesky", "generalized"))
        one_of("structural", "bands", ("analytic", "montecarlo", "none"))


def load_config(path) -> PipelineConfig:
    """Read a YAML config (or a bundle manifest) from disk."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return parse_config(doc, path.parent.resolve())


# ---------------------------------------------------------------------------
# serialization


def fmt(v) -> str:
    """Render a cell: 10 significant digits for floats, ``NA`` for missing."""
    if v is None:
        return "NA"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not math.isfinite(x):
            return "NA"
        s = f"{x:.10g}"
        if not math.isfinite(float(s)):
            s = repr(x)  # rounding up would overflow near the largest double
        return "0" if s == "-0" else s
    return str(v)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(c) for c in r])
    return buf.getvalue()


def sha256_bytes(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


@dataclass
class ReportBundle:
    """Artifacts of one run, keyed by file name, plus the run report."""

    directory: Path
    files: dict[str, str] = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    @property
    def failed_stages(self) -> list[str]:
        return [s for s, r in self.report.get("stages", {}).items() if r["status"] == "error"]

    @property
    def ok(self) -> bool:
        return not self.failed_stages

    def path(self, name: str) -> Path:
        return self.directory / name


# ---------------------------------------------------------------------------
# stage context


class _Context:
    def __init__(self, config: PipelineConfig, columns: dict[str, Series]):
        self.config = config
        self.columns = columns
        self.resolved: dict[str, Any] = {}
        self._cache: dict[str, Any] = {}

    def series(self, name: str) -> Series:
        if name not in self.columns:
            raise ConfigError(f"unknown series {name!r}; available: {sorted(self.columns)}")
        return self.columns[name]

    def frame_of(self, names) -> Frame:
        return Frame.align(self.series(n) for n in names)

    def selection(self, names, max_lag: int, deterministics: str) -> vm.SelectionTable:
        key = f"sel:{','.join(names)}:{max_lag}:{deterministics}"
        if key not in self._cache:
            self._cache[key] = vm.select_lag_order(self.frame_of(names), max_lag, deterministics)
        return self._cache[key]

    def var_order(self, names, requested) -> int:
        """Resolve an ``auto`` VAR order to the AIC choice of the lag-selection settings."""
        if requested != "auto":
            return int(requested)
        vs = self.config.sections.get("var_lags", SCHEMA_DEFAULT_VAR)
        return int(self.selection(names, vs["max_lag"], vs["deterministics"]).selected["aic"])


SCHEMA_DEFAULT_VAR = {"max_lag": 12, "deterministics": "const_trend"}


def _test_row(r: TestResult, level: float = 0.05) -> tuple:
    cv5 = (r.critical_values or {}).get(level)
    return r.statistic, r.p_value, cv5, r.rejects(level)


# ---------------------------------------------------------------------------
# stages; each returns {file name: csv text}


def _stage_describe(ctx: _Context) -> dict[str, str]:
    sec = ctx.config.section("describe")
    L = int(sec["lags"])
    rows = []
    for name in sec["series"]:
        s = ctx.series(name)
        d = describe(s)
        dev = s.values - s.values.mean()
        arch = diag.arch_lm(dev, L)
        lb = diag.ljung_box(s.values, L)
        lb2 = diag.ljung_box(s.values, L, squared=True)
        rows.append((name, d.n, d.mean, d.std, d.skewness, d.kurtosis, d.jarque_bera, d.jb_pvalue,
                     arch.statistic, arch.p_value, lb.statistic, lb.p_value, lb2.statistic, lb2.p_value))
    header = ["series", "n", "mean", "std", "skewness", "kurtosis", "jarque_bera", "jb_p_value",
              f"arch_{L}", f"arch_{L}_p_value", f"lb_{L}", f"lb_{L}_p_value", f"lb2_{L}", f"lb2_{L}_p_value"]
    return {"table1.csv": csv_text(header, rows)}


def _stage_unit_roots(ctx: _Context) -> dict[str, str]:
    sec = ctx.config.section("unit_roots")
    rows = []
    for name in sec["series"]:
        s = ctx.series(name)
        det = sec["difference_deterministic"] if name in sec["differenced"] else sec["level_deterministic"]
        spec = ur.UnitRootSpec(det, criterion=sec["criterion"], max_lags=sec["max_lags"],
                               bandwidth=sec["bandwidth"])
        for kind in sec["tests"]:
            r = ur.unit_root(s, kind, spec)
            stat, p, cv5, rej = _test_row(r)
            lags = r.extra.get("lags", r.extra.get("bandwidth"))
            rows.append((name, kind, det, stat, p, cv5, rej, lags, ""))
        for kind in sec["break_tests"]:
            b = ur.break_unit_root(s, kind, criterion=sec["criterion"], max_lags=sec["max_lags"])
            dates = ";".join(d.iso() for d in b.break_dates) if b.break_dates else ""
            rows.append((name, kind, "break", b.statistic, None, b.critical_values.get(0.05), b.rejects(0.05),
                         b.lags, dates))
    header = ["series", "test", "deterministic", "statistic", "p_value", "cv_5pct", "reject_5pct", "lags",
              "break_dates"]
    return {"table2.csv": csv_text(header, rows)}


def _stage_var_lags(ctx: _Context) -> dict[str, str]:
    sec = ctx.config.section("var_lags")
    tab = ctx.selection(sec["variables"], int(sec["max_lag"]), sec["deterministics"])
    ctx.resolved["var_lags.selected"] = dict(sorted(tab.selected.items()))
    rows = []
    for i, r in enumerate(tab.rows()):
        rows.append((r["lag"], r["loglik"], r["lr"], tab.lr_p_value[i], r["fpe"], r["aic"], r["sc"], r["hq"],
                     ";".join(r["selected"])))
    header = ["lag", "loglik", "lr", "lr_p_value", "fpe", "aic", "sc", "hq", "selected_by"]
    return {"table3.csv": csv_text(header, rows)}


def _stage_cointegration(ctx: _Context) -> dict[str, str]:
    sec = ctx.config.section("cointegration")
    names = sec["variables"]
    fr = ctx.frame_of(names)
    rows = []
    for dep in names:
        others = [n for n in names if n != dep]
        y = fr[dep]
        x = np.column_stack([fr[o].values for o in others])
        for kind in sec["residual_tests"]:
            r = coint.residual_cointegration(y, x, kind, sec["residual_deterministic"], criterion=sec["criterion"])
            cv5 = r.critical_values.get(0.05)
            rows.append(("residual", kind, dep, "tau", r.tau_statistic, r.p_values[0], cv5,
                         r.p_values[0] < 0.05, r.lag_order, ""))
            rows.append(("residual", kind, dep, "z", r.z_statistic, r.p_values[1], None,
                         r.p_values[1] < 0.05, r.lag_order, ""))
        for model in sec["gregory_hansen"]:
            g = coint.gregory_hansen(y, x, model, criterion=sec["criterion"])
            for i, (stat, val) in enumerate((("adf", g.adf_star), ("zt", g.zt_star), ("za", g.za_star))):
                cv5 = g.critical_values[stat].get(0.05)
                date = g.break_dates[i].iso() if g.break_dates else str(g.break_index[i])
                rows.append(("gregory_hansen", model, dep, stat, val, None, cv5, val < cv5, "", date))
    jc = sec["johansen_case"]
    j = coint.johansen(fr, int(sec["johansen_lags"]), jc)
    for r in range(len(j.eigenvalues)):
        h = f"r<={r}"
        rows.append(("johansen", jc, h, "eigenvalue", j.eigenvalues[r], None, None, None, j.var_lags, ""))
        rows.append(("johansen", jc, h, "trace", j.trace[r], j.trace_p_values[r], j.trace_critical_5pct[r],
                     j.trace[r] > j.trace_critical_5pct[r], j.var_lags, ""))
        rows.append(("johansen", jc, h, "max_eigen", j.max_eigen[r], j.max_eigen_p_values[r],
                     j.max_eigen_critical_5pct[r], j.max_eigen[r] > j.max_eigen_critical_5pct[r], j.var_lags, ""))
    ctx.resolved["cointegration.johansen_rank_trace"] = int(j.rank_trace)
    header = ["panel", "test", "subject", "statistic_name", "statistic", "p_value", "cv_5pct", "reject_5pct",
              "lags", "break_date"]
    ic = coint.johansen_information_table(fr, int(sec["johansen_lags"]))
    ic_rows = []
    for crit in sorted(ic):
        tab = ic[crit]
        for case_idx in range(tab.shape[1]):
            for rank in range(tab.shape[0]):
                ic_rows.append((crit, case_idx + 1, rank, tab[rank, case_idx]))
    return {"table4.csv": csv_text(header, rows),
            "table4_johansen_ic.csv": csv_text(["criterion", "case", "rank", "value"], ic_rows)}


def _ardl_block(fit: ardl_mod.ArdlFit, sec: dict, label: str) -> tuple[list, list, list, diag.CusumPath | None,
                                                                         diag.CusumPath | None]:
    lvl, ecm_rows, tests = [], [], []
    lf = fit.levels_fit
    for nm, c, se, t, p in zip(lf.names, lf.coefficients, lf.bse, lf.tvalues, lf.pvalues):
        lvl.append((label, "levels", nm, c, se, t, p))
    try:
        lr = ardl_mod.long_run_coefficients(fit)
        for nm, c, se in zip(lr.names, lr.coefficients, lr.std_errors):
            lvl.append((label, "long_run", nm, c, se, c / se if se > 0 else None, None))
    except TsEconError as exc:
        tests.append((label, "long_run", None, None, None, None, None, f"error: {exc}"))
    ecm = ardl_mod.ecm_representation(fit)
    for nm, c, se, t, p in zip(ecm.names, ecm.coefficients, ecm.bse, ecm.tvalues, ecm.pvalues):
        ecm_rows.append((label, nm, c, se, t, p))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        b = ardl_mod.bounds_test(fit, sec["bounds_source"])
    note = "; ".join(str(w.message) for w in caught)
    ref = sec["reference_bands"]
    lv = b.level
    if ref is not None:
        lv = float(ref.get("level", 0.05))
        tb = {lv: tuple(ref["t"])} if ref.get("t") is not None else {}
        b_ref = replace(b, f_bounds={lv: tuple(ref["f"])}, t_bounds=tb, level=lv)
    else:
        b_ref = b
    f0, f1 = b_ref.f_bounds[lv]
    tests.append((label, "bounds_f", b.f_statistic, None, f0, f1, b_ref.verdict, note))
    if b.t_statistic is not None:
        t0, t1 = b_ref.t_bounds.get(lv, (None, None))
        tests.append((label, "bounds_t", b.t_statistic, None, t0, t1, b_ref.verdict, note))
    tf0, tf1 = b.f_bounds[0.05]
    tests.append((label, f"bounds_f_table_{b.source}_case_{b.case}", b.f_statistic, None, tf0, tf1,
                  b.verdict_at(0.05), ""))

    ols_fit = fit.ols_fit
    checks: list[tuple[str, Callable[[], TestResult]]] = [
        ("short_run_causality", lambda: ardl_mod.short_run_causality(fit)),
        (f"breusch_godfrey_{sec['serial_lags']}", lambda: diag.breusch_godfrey(ols_fit, int(sec["serial_lags"]))),
        ("ramsey_reset", lambda: diag.ramsey_reset(ols_fit, tuple(sec["reset_powers"]))),
        *[(f"het_{k}", (lambda k=k: diag.het_test(ols_fit, k))) for k in diag.HET_KINDS],
        (f"arch_{sec['arch_lags']}", lambda: diag.arch_lm(ols_fit.residuals, int(sec["arch_lags"]))),
    ]
    for name, run in checks:
        try:
            r = run()
            tests.append((label, name, r.statistic, r.p_value, None, None, r.distribution, ""))
        except TsEconError as exc:
            tests.append((label, name, None, None, None, None, None, f"error: {exc}"))
    for nm in ("r2", "aic", "sc", "hq"):
        val = ols_fit.r2 if nm == "r2" else fit.criteria.get(nm)
        tests.append((label, nm, val, None, None, None, None, ""))
    paths = []
    for kind in ("cusum", "cusumq"):
        try:
            paths.append(diag.cusum(ols_fit, kind, float(sec["cusum_level"])))
        except TsEconError as exc:
            tests.append((label, kind, None, None, None, None, None, f"error: {exc}"))
            paths.append(None)
    for p in paths:
        if p is not None:
            tests.append((label, f"{p.kind}_inside", float(p.inside), None, None, None, None, ""))
    return lvl, ecm_rows, tests, paths[0], paths[1]


def _stage_ardl(ctx: _Context) -> dict[str, str]:
    sec = ctx.config.section("ardl")
    dep, regs = sec["dependent"], list(sec["regressors"])
    fr = ctx.frame_of([dep, *regs])
    kwargs = dict(max_p=int(sec["max_p"]), max_q=int(sec["max_q"]), criterion=sec["criterion"],
                  case=sec["case"], hac=bool(sec["hac"]))
    models = [(dep, regs)]
    if sec["reverse"] and len(regs) == 1:
        models.append((regs[0], [dep]))
    levels, ecm, tests, cus = [], [], [], []
    dates = fr.dates()
    for i, (y_name, x_names) in enumerate(models):
        fit = ardl_mod.fit_ardl(fr[y_name], fr.select(x_names), **kwargs)
        label = f"{y_name}|{'+'.join(x_names)}"
        ctx.resolved[f"ardl.order[{label}]"] = fit.spec.label
        a, b, c, cs, cq = _ardl_block(fit, sec, label)
        levels += a
        ecm += b
        tests += c
        if i == 0:
            for p in (cs, cq):
                if p is not None:
                    # step s is the s-th observation of the estimation sample
                    cus += [(p.kind, step, dates[int(fit.rows[step - 1])].iso(), v, lo, hi)
                            for step, v, lo, hi in p.rows()]
    out = {
        "table5.csv": csv_text(["model", "section", "variable", "coefficient", "std_error", "t_statistic",
                                "p_value"], levels),
        "table5_tests.csv": csv_text(["model", "test", "statistic", "p_value", "bound_lower", "bound_upper",
                                      "detail", "note"], tests),
        "table6.csv": csv_text(["model", "variable", "coefficient", "std_error", "t_statistic", "p_value"], ecm),
        "fig2_cusum.csv": csv_text(["kind", "step", "date", "statistic", "lower", "upper"], cus),
    }
    return out


def _stage_causality(ctx: _Context) -> dict[str, str]:
    sec = ctx.config.section("causality")
    names = sec["variables"]
    fr = ctx.frame_of(names)
    k = ctx.var_order(names, sec["k"])
    dmax = ur.max_integration_order(fr) if sec["d_max"] == "auto" else int(sec["d_max"])
    ctx.resolved["causality.k"] = k
    ctx.resolved["causality.d_max"] = dmax
    ty = vm.toda_yamamoto(fr, k, dmax, sec["deterministics"])
    ctx.resolved["causality.verdict"] = ty.verdict()
    rows = []
    for eq, tab in ty.table.items():
        for excl, r in tab.items():
            df = int(r.distribution[5:-1])
            rows.append((eq, excl, r.statistic, df, r.p_value, r.p_value < 0.05))
    pm = vm.portmanteau(ty.fit, int(sec["portmanteau_lags"]))
    extra = [("portmanteau_adjusted", pm.statistic, pm.distribution, pm.p_value)]
    roots = vm.stability_roots(ty.fit)
    root_rows = [(float(z.real), float(z.imag), float(m), bool(m < 1.0)) for z, m in zip(roots.roots, roots.moduli)]
    ctx.resolved["causality.stable"] = bool(roots.stable)
    return {
        "table7.csv": csv_text(["dependent", "excluded", "chi2", "df", "p_value", "reject_5pct"], rows),
        "table7_tests.csv": csv_text(["test", "statistic", "distribution", "p_value"], extra),
        "fig3_roots.csv": csv_text(["real", "imag", "modulus", "inside"], root_rows),
    }


def _stage_structural(ctx: _Context) -> dict[str, str]:
    sec = ctx.config.section("structural")
    names = sec["variables"]
    fr = ctx.frame_of(names)
    p = ctx.var_order(names, sec["p"])
    ctx.resolved["structural.p"] = p
    fit = vm.fit_var(fr, p, sec["deterministics"])
    H = int(sec["horizon"])
    ordering = sec["ordering"] or list(names)
    irf = impulse_response(fit, H, sec["irf_method"], ordering, bands=sec["bands"],
                           replications=int(sec["replications"]), seed=ctx.config.seed)
    fe = fevd(fit, H, ordering)
    hd = historical_decomposition(fit, sec["hd_method"], ordering if sec["hd_method"] == "cholesky" else None)
    ctx.resolved["structural.hd_closure_error"] = float(hd.closure_error)
    dates = fr.dates()
    hd_rows = []
    T = hd.observed.shape[1]
    for t in range(T):
        d = dates[hd.first_row + t].iso()
        for i, v in enumerate(hd.variables):
            hd_rows.append((d, v, "observed", hd.observed[i, t]))
            hd_rows.append((d, v, "baseline", hd.baseline[i, t]))
            for j, s in enumerate(hd.shocks):
                hd_rows.append((d, v, f"shock:{s}", hd.contributions[i, j, t]))
    return {
        "fig4_irf.csv": csv_text(["shock", "variable", "horizon", "value", "lower", "upper"], irf.long_rows()),
        "fig5_fevd.csv": csv_text(["variable", "shock", "horizon", "share"], fe.long_rows()),
        "fig5_hd.csv": csv_text(["date", "variable", "component", "value"], hd_rows),
    }


_RUNNERS: dict[str, Callable[[_Context], dict[str, str]]] = {
    "describe": _stage_describe,
    "unit_roots": _stage_unit_roots,
    "var_lags": _stage_var_lags,
    "cointegration": _stage_cointegration,
    "ardl": _stage_ardl,
    "causality": _stage_causality,
    "structural": _stage_structural,
}


# ---------------------------------------------------------------------------
# data


def build_columns(config: PipelineConfig, raw_path: Path) -> dict[str, Series]:
    """Load the raw CSV and apply the configured transforms.

    Differenced columns start one month later than their source; stages
    align the columns they use on their common window.
    """
    d = config.data
    base = load_csv(raw_path, d["date_column"], d["columns"])
    if not config.transforms:
        return {s.name: s for s in base}
    out = {}
    for name, spec in config.transforms.items():
        if spec["source"] not in base:
            raise ConfigError(f"transform {name!r}: source column {spec['source']!r} not in data {base.names}")
        s = base[spec["source"]]
        s = s if spec["kind"] == "level" else transform(s, spec["kind"])
        out[name] = s.rename(name)
    return out


def resolve_output_dir(config: PipelineConfig, override: str | os.PathLike | None = None) -> Path:
    out = Path(override) if override is not None else Path(config.output_dir)
    if out.is_absolute():
        return out
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return (Path(root) / out) if root else out.resolve()


def run_pipeline(config: PipelineConfig, output_dir: str | os.PathLike | None = None,
                 raw_path: str | os.PathLike | None = None) -> ReportBundle:
    """Execute the configured stages and write the bundle.

    Parameters
    ----------
    config : PipelineConfig
    output_dir : path, optional
        Overrides ``config.output_dir``.  Relative paths are placed under
        ``$TSECON_OUTPUT_ROOT`` when set.
    raw_path : path, optional
        Use this CSV instead of the configured data source.

    Returns
    -------
    ReportBundle
        Stage failures are recorded in ``bundle.report["stages"]``; only
        configuration and data-loading problems raise.
    """
    out = resolve_output_dir(config, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if raw_path is not None:
        src = Path(raw_path)
    elif config.data["url"] is not None:
        from .cli import fetch

        src = out / "input.csv"
        fetch(config.data["url"], src, quiet=True)
    else:
        src = config.data_path()
    if not src.exists():
        raise ConfigError(f"data file not found: {src}")
    data_bytes = src.read_bytes()
    ctx = _Context(config, build_columns(config, src))

    files: dict[str, str] = {}
    stages: dict[str, dict] = {}
    for st in STAGES:
        if st not in config.stages:
            continue
        try:
            produced = _RUNNERS[st](ctx)
        except (TsEconError, ValueError, ArithmeticError, np.linalg.LinAlgError, KeyError, OSError) as exc:
            stages[st] = {"status": "error", "error": f"{type(exc).__name__}: {exc}"}
            continue
        stages[st] = {"status": "ok", "files": sorted(produced)}
        files.update(produced)

    for name, text in files.items():
        (out / name).write_text(text)
    checks = {name: sha256_bytes(text.encode()) for name, text in sorted(files.items())}
    report = {
        "library_version": __version__,
        "resolved": dict(sorted(ctx.resolved.items())),
        "stages": stages,
    }
    report_text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    (out / "report.json").write_text(report_text)
    checks["report.json"] = sha256_bytes(report_text.encode())
    snapshot = copy.deepcopy(config.raw)
    if config.data["path"] is not None:
        snapshot.setdefault("data", {})["path"] = str(config.data_path())
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "library_version": __version__,
        "config": snapshot,
        "resolved": report["resolved"],
        "data": {"source": str(src), "sha256": sha256_bytes(data_bytes)},
        "files": checks,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    return ReportBundle(out, {n: str(out / n) for n in checks}, report, manifest)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def verify_bundle(directory) -> list[str]:
    """Names of files whose checksum differs from the manifest (empty when intact)."""
    directory = Path(directory)
    man = json.loads((directory / "manifest.json").read_text())
    bad = []
    for name, digest in man["files"].items():
        p = directory / name
        if not p.exists() or sha256_bytes(p.read_bytes()) != digest:
            bad.append(name)
    return bad
