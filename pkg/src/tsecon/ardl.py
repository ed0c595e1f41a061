"""ARDL specification search, long-run multipliers, error-correction form and bounds test.

The levels regression is

    y_t = det + sum_{j=1..p} a_j y_{t-j} + sum_i sum_{j=0..q_i} b_ij x_{i,t-j} + u_t

and every other representation is derived from it.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import criticalvalues as cv
from .dataframe import Frame, Series
from .errors import InsufficientData, NoLaggedRegressors, RankDeficient, UnitRootDenominator
from .linreg import OlsFit, TestResult, ols, wald_test, zero_restrictions

CASES = {
    "no_const": "I",
    "restricted_const": "II",
    "unrestricted_const": "III",
    "restricted_trend": "IV",
    "unrestricted_trend": "V",
}
_DET = {"I": ([], []), "II": ([], ["const"]), "III": (["const"], []), "IV": (["const"], ["trend"]),
        "V": (["const", "trend"], [])}


@dataclass(frozen=True)
class ArdlSpec:
    p: int
    q: tuple[int, ...]
    case: str = "unrestricted_const"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if any(v < 0 for v in self.q):
            raise ValueError("q entries must be >= 0")
        if self.case not in CASES:
            raise ValueError(f"case must be one of {sorted(CASES)}")
        object.__setattr__(self, "q", tuple(int(v) for v in self.q))

    @property
    def pss_case(self) -> str:
        return CASES[self.case]

    @property
    def label(self) -> str:
        return "ARDL(" + ",".join(str(v) for v in (self.p, *self.q)) + ")"


def _lag(x: np.ndarray, j: int, rows: np.ndarray) -> np.ndarray:
    return x[rows - j]


def _name(v: str, j: int) -> str:
    return v if j == 0 else f"{v}(-{j})"


def _det_cols(names: Sequence[str], rows: np.ndarray) -> list[np.ndarray]:
    return [np.ones(rows.size) if d == "const" else rows + 1.0 for d in names]


@dataclass(frozen=True)
class LongRun:
    names: tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    covariance: np.ndarray = field(repr=False)

    @property
    def tvalues(self) -> np.ndarray:
        return self.coefficients / self.std_errors

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def t(self, name: str) -> float:
        return float(self.tvalues[self.names.index(name)])


@dataclass(frozen=True)
class ArdlFit:
    """Selected ARDL model.

    ``levels_fit`` carries the requested covariance (HAC by default);
    ``ols_fit`` is the same regression with the ordinary covariance.
    """

    spec: ArdlSpec
    y_name: str
    x_names: tuple[str, ...]
    levels_fit: OlsFit = field(repr=False)
    ols_fit: OlsFit = field(repr=False)
    rows: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    start: object = None
    criteria: Mapping[str, float] = field(default_factory=dict)
    grid: Mapping[tuple[int, ...], float] = field(default_factory=dict, repr=False)
    skipped: tuple[tuple[int, ...], ...] = ()
    hac: bool = True

    @property
    def ar_sum(self) -> float:
        return float(sum(self.levels_fit.coef(_name(self.y_name, j)) for j in range(1, self.spec.p + 1)))

    @property
    def ec_coefficient(self) -> float:
        return -(1.0 - self.ar_sum)

    def long_run(self) -> LongRun:
        return long_run_coefficients(self)

    def ecm(self) -> OlsFit:
        return ecm_representation(self)


def _levels_design(y: np.ndarray, x: np.ndarray, yname: str, xnames: Sequence[str], spec: ArdlSpec,
                   rows: np.ndarray):
    cols, names = [], []
    for j in range(1, spec.p + 1):
        cols.append(_lag(y, j, rows))
        names.append(_name(yname, j))
    for i, v in enumerate(xnames):
        for j in range(spec.q[i] + 1):
            cols.append(_lag(x[:, i], j, rows))
            names.append(_name(v, j))
    unres, res = _DET[spec.pss_case]
    det = unres + res
    cols += _det_cols(det, rows)
    names += ["C" if d == "const" else "@TREND" for d in det]
    return np.column_stack(cols), tuple(names)


def _inputs(y, xs):
    if isinstance(y, Series):
        yname, start, yv = y.name, y.start, np.asarray(y.values, dtype=float)
    else:
        yname, start, yv = "y", None, np.asarray(y, dtype=float)
    if isinstance(xs, Frame):
        xnames, xv = tuple(xs.names), xs.values()
    elif isinstance(xs, Series):
        xnames, xv = (xs.name,), np.asarray(xs.values, dtype=float)[:, None]
    else:
        xv = np.asarray(xs, dtype=float)
        xv = xv[:, None] if xv.ndim == 1 else xv
        xnames = tuple(f"x{i}" for i in range(xv.shape[1]))
    if xv.shape[0] != yv.size:
        raise ValueError("y and regressors must be aligned")
    return yname, start, yv, xnames, xv


def fit_ardl(y, xs, max_p: int = 8, max_q: int = 8, criterion: str = "aic", case: str = "unrestricted_const",
             order: tuple[int, ...] | None = None, hac: bool = True, bandwidth: int | str = "auto") -> ArdlFit:
    """Select and estimate an ARDL(p, q_1..q_k) model.

    Every candidate in ``[1..max_p] x [0..max_q]^k`` is fitted on the sample
    left after ``max(max_p, max_q)`` initial observations.  Ties in the
    criterion go to the smaller total lag count, then the smaller ``p``.
    Passing ``order=(p, q_1, ...)`` skips the search but keeps the sample.
    """
    if criterion not in ("aic", "sc", "hq"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if max_p < 1 or max_q < 0:
        raise ValueError("need max_p >= 1 and max_q >= 0")
    yname, start, yv, xnames, xv = _inputs(y, xs)
    k = xv.shape[1]
    m0 = max(max_p, max_q) if order is None else max(order[0], *order[1:])
    rows = np.arange(m0, yv.size)
    candidates = [order] if order is not None else [
        (p, *q) for p in range(1, max_p + 1) for q in itertools.product(range(max_q + 1), repeat=k)]
    largest = 1 + max_p + k * (max_q + 1) + 2
    if rows.size <= largest and order is None:
        raise InsufficientData(f"{rows.size} observations for up to {largest} parameters")
    grid: dict[tuple[int, ...], float] = {}
    fits: dict[tuple[int, ...], OlsFit] = {}
    skipped = []
    for c in candidates:
        spec = ArdlSpec(c[0], c[1:], case)
        X, names = _levels_design(yv, xv, yname, xnames, spec, rows)
        try:
            f = ols(yv[rows], X, names)
        except RankDeficient:
            skipped.append(tuple(c))
            continue
        grid[tuple(c)] = getattr(f, criterion)
        fits[tuple(c)] = f
    if not grid:
        raise InsufficientData("no estimable candidate model")
    best = min(grid, key=lambda c: (grid[c], sum(c), c[0], c))
    f = fits[best]
    lf = f.with_hac(bandwidth) if hac else f
    return ArdlFit(ArdlSpec(best[0], best[1:], case), yname, xnames, lf, f, rows, yv, xv, start,
                   {"aic": f.aic, "sc": f.sc, "hq": f.hq}, grid, tuple(skipped), hac)


def long_run_coefficients(fit: ArdlFit, tol: float = 1e-6) -> LongRun:
    """``pi_i = sum_j b_ij / (1 - sum_j a_j)`` with delta-method standard errors.

    Restricted deterministic terms get long-run coefficients too.
    """
    lf = fit.levels_fit
    spec = fit.spec
    den = 1.0 - fit.ar_sum
    if abs(den) <= tol:
        raise UnitRootDenominator(f"1 - sum(a) = {den:.3g}")
    ar_idx = [lf.index(_name(fit.y_name, j)) for j in range(1, spec.p + 1)]
    groups: list[tuple[str, list[int]]] = []
    for i, v in enumerate(fit.x_names):
        groups.append((v, [lf.index(_name(v, j)) for j in range(spec.q[i] + 1)]))
    for d in _DET[spec.pss_case][1]:
        nm = "C" if d == "const" else "@TREND"
        groups.append((nm, [lf.index(nm)]))
    b = lf.coefficients
    vals = np.empty(len(groups))
    G = np.zeros((len(groups), lf.k))
    for g, (_, idx) in enumerate(groups):
        num = float(np.sum(b[idx]))
        vals[g] = num / den
        G[g, idx] = 1.0 / den
        G[g, ar_idx] = num / den**2
    V = G @ lf.covariance @ G.T
    return LongRun(tuple(nm for nm, _ in groups), vals, np.sqrt(np.diag(V)), V)


def _delta(v: np.ndarray) -> np.ndarray:
    return np.diff(v, prepend=np.nan)


def ec_term(fit: ArdlFit, rows: np.ndarray | None = None) -> np.ndarray:
    """Lagged equilibrium error ``EC_{t-1} = y_{t-1} - pi' x_{t-1}`` at ``rows``.

    A regressor with ``q_i = 0`` has no lagged difference in the ECM, so its
    current level ``x_t`` enters the error term instead of ``x_{t-1}``.
    Restricted deterministics are subtracted with their long-run coefficients.
    """
    rows = fit.rows if rows is None else rows
    lr = long_run_coefficients(fit)
    ec = fit.y[rows - 1].copy()
    for i, v in enumerate(fit.x_names):
        lag = 1 if fit.spec.q[i] > 0 else 0
        ec -= lr.coef(v) * fit.x[rows - lag, i]
    for d in _DET[fit.spec.pss_case][1]:
        ec -= lr.coef("C" if d == "const" else "@TREND") * (np.ones(rows.size) if d == "const" else rows + 0.0)
    return ec


def _ecm_short_run(fit: ArdlFit, rows: np.ndarray) -> tuple[list[np.ndarray], list[str]]:
    dy = _delta(fit.y)
    cols, names = [], []
    for j in range(1, fit.spec.p):
        cols.append(dy[rows - j])
        names.append(f"D({_name(fit.y_name, j)})")
    for i, v in enumerate(fit.x_names):
        dx = _delta(fit.x[:, i])
        for j in range(fit.spec.q[i]):
            cols.append(dx[rows - j])
            names.append(f"D({_name(v, j)})")
    return cols, names


def ecm_representation(fit: ArdlFit, bandwidth: int | str = "auto") -> OlsFit:
    """Error-correction form: ``dy_t`` on short-run differences, unrestricted deterministics and ``EC_{t-1}``.

    Because ``EC`` uses the implied long-run coefficients, the least-squares
    solution reproduces the levels fit exactly: ``D(x(-j))`` gets
    ``-sum_{i>j} b_i`` and ``CointEq(-1)`` gets ``-(1 - sum a)``.
    """
    rows = fit.rows
    cols, names = _ecm_short_run(fit, rows)
    unres = _DET[fit.spec.pss_case][0]
    cols += _det_cols(unres, rows)
    names += ["C" if d == "const" else "@TREND" for d in unres]
    cols.append(ec_term(fit, rows))
    names.append("CointEq(-1)")
    f = ols(_delta(fit.y)[rows], np.column_stack(cols), names)
    return f.with_hac(bandwidth) if fit.hac else f


def ecm_identity_coefficients(fit: ArdlFit) -> dict[str, float]:
    """ECM coefficients computed from the levels coefficients by partial sums."""
    lf = fit.levels_fit
    spec = fit.spec
    a = [lf.coef(_name(fit.y_name, j)) for j in range(1, spec.p + 1)]
    out = {}
    for j in range(1, spec.p):
        out[f"D({_name(fit.y_name, j)})"] = -sum(a[j:])
    for i, v in enumerate(fit.x_names):
        b = [lf.coef(_name(v, j)) for j in range(spec.q[i] + 1)]
        for j in range(spec.q[i]):
            out[f"D({_name(v, j)})"] = b[0] if j == 0 else -sum(b[j + 1:])
    out["CointEq(-1)"] = -(1.0 - sum(a))
    return out


@dataclass(frozen=True)
class BoundsResult:
    """Bounds F and t statistics with their I(0)/I(1) bands by level."""

    f_statistic: float
    t_statistic: float | None
    f_bounds: Mapping[float, tuple[float, float]]
    t_bounds: Mapping[float, tuple[float, float]]
    source: str
    case: str
    k: int
    nobs: int
    level: float = 0.05
    conditional_fit: OlsFit | None = field(default=None, repr=False)

    @property
    def verdict(self) -> str:
        return self.verdict_at(self.level)

    def verdict_at(self, level: float) -> str:
        f0, f1 = self.f_bounds[level]
        t_ok = self.t_statistic is None or level not in self.t_bounds
        if self.f_statistic > f1 and (t_ok or self.t_statistic < self.t_bounds[level][1]):
            return "cointegrated"
        if self.f_statistic < f0:
            return "not_cointegrated"
        return "inconclusive"


def conditional_ecm(fit: ArdlFit) -> tuple[OlsFit, list[str]]:
    """Unrestricted conditional ECM and the names of its tested level terms."""
    rows = fit.rows
    cols, names = _ecm_short_run(fit, rows)
    unres, res = _DET[fit.spec.pss_case]
    cols += _det_cols(unres, rows)
    names += ["C" if d == "const" else "@TREND" for d in unres]
    tested = [f"{fit.y_name}(-1)"]
    cols.append(fit.y[rows - 1])
    for i, v in enumerate(fit.x_names):
        # With q_i = 0 the regressor has no lagged difference, so it enters at its current level.
        lag = 1 if fit.spec.q[i] > 0 else 0
        cols.append(fit.x[rows - lag, i])
        tested.append(_name(v, lag))
    names += tested[:1] + tested[1:]
    for d in res:
        cols += _det_cols([d], rows)
        nm = "C" if d == "const" else "@TREND"
        names.append(nm)
        tested.append(nm)
    f = ols(_delta(fit.y)[rows], np.column_stack(cols), names)
    return f, tested


def bounds_test(fit: ArdlFit, sample_size_source: str = "pesaran_asymptotic", level: float = 0.05,
                levels: Sequence[float] = (0.10, 0.05, 0.025, 0.01)) -> BoundsResult:
    """Bounds F (all lagged levels) and t (lagged dependent level) on the conditional ECM.

    Both use the ordinary least-squares covariance.
    """
    if sample_size_source not in ("pesaran_asymptotic", "narayan_small_sample"):
        raise ValueError(f"unknown source {sample_size_source!r}")
    f, tested = conditional_ecm(fit)
    F = wald_test(f, zero_restrictions(f, tested), form="F", name="bounds_f").statistic
    t = float(f.tvalues[f.index(tested[0])])
    k = len(fit.x_names)
    case = fit.spec.pss_case
    n = f.n
    source = sample_size_source
    if source == "narayan_small_sample" and not cv.NARAYAN_RANGE[0] <= n <= cv.NARAYAN_RANGE[1]:
        warnings.warn(f"n = {n} outside the small-sample range {cv.NARAYAN_RANGE}; using asymptotic bounds",
                      stacklevel=2)
        source = "pesaran_asymptotic"
    nkey = n if source == "narayan_small_sample" else cv.INF
    fb, tb = {}, {}
    for lv in levels:
        band = cv.bounds(case, k, nkey, lv)
        fb[lv] = band.f
        if band.t is not None:
            tb[lv] = band.t
    if level not in fb:
        raise ValueError(f"level {level} not among {tuple(levels)}")
    t_stat = t if case in ("I", "III", "V") else None
    return BoundsResult(float(F), t_stat, fb, tb, source, case, k, n, level, f)


def short_run_causality(fit: ArdlFit) -> TestResult:
    """Wald F that all lagged (not contemporaneous) regressor terms vanish in the levels fit."""
    lf = fit.levels_fit
    names = [_name(v, j) for i, v in enumerate(fit.x_names) for j in range(1, fit.spec.q[i] + 1)]
    if not names:
        raise NoLaggedRegressors(f"{fit.spec.label} has no lagged regressors")
    return wald_test(lf, zero_restrictions(lf, names), form="F", name="short_run_causality")
