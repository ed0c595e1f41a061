"""Residual-based, system and break-aware cointegration tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import linalg

from . import criticalvalues as cv
from .dataframe import Frame, MonthStamp, Series
from .errors import InsufficientData, SingularSystem
from .linreg import LEVELS, TestResult
from .unitroot import _adf, _autocov, _interior, newey_west_auto_bandwidth

RESIDUAL_KINDS = ("engle_granger", "phillips_ouliaris")
JOHANSEN_CASES = {
    "none": "1",
    "restricted_constant": "2",
    "unrestricted_constant": "3",
    "restricted_trend": "4",
    "unrestricted_trend": "5",
}
GH_MODELS = {"break_level": "C", "break_trend": "C/T", "break_regime": "C/S", "break_regime_trend": "C/S/T"}


def _vec(s) -> np.ndarray:
    return np.asarray(s.values if isinstance(s, Series) else s, dtype=float).ravel()


def _static_residuals(y: np.ndarray, X: np.ndarray) -> np.ndarray:
    b = np.linalg.lstsq(X, y, rcond=None)[0]
    return y - X @ b


def _det(n: int, case: str) -> list[np.ndarray]:
    t = np.arange(1, n + 1, dtype=float)
    return {"n": [], "c": [np.ones(n)], "ct": [np.ones(n), t]}[case]


@dataclass(frozen=True)
class EGResult:
    kind: str
    dependent: str
    tau_statistic: float
    z_statistic: float
    p_values: tuple[float, float]
    lag_order: int
    critical_values: Mapping[float, float] = field(default_factory=dict)

    def rejects(self, level: float = 0.05) -> bool:
        return self.p_values[0] < level

    def as_test_results(self) -> tuple[TestResult, TestResult]:
        tau = TestResult(f"{self.kind}_tau", self.tau_statistic, "coint_tau", self.p_values[0],
                         dict(self.critical_values), lower_tail=True, extra={"lags": self.lag_order})
        z = TestResult(f"{self.kind}_z", self.z_statistic, "coint_z", self.p_values[1], lower_tail=True)
        return tau, z


def phillips_ouliaris_stats(e: np.ndarray, bandwidth: int | str = "auto") -> tuple[float, float, int]:
    """Bias-corrected ``Z_t`` and ``Z_alpha`` for a residual series.

    With ``u_t = e_t - rho e_{t-1}`` and the Bartlett one-sided autocovariance
    sum ``lam``, ``rho* = (sum e_t e_{t-1} - n lam) / sum e_{t-1}^2``,
    ``Z_alpha = n (rho* - 1)`` and ``Z_t = (rho* - 1) / sqrt(s^2 / sum e_{t-1}^2)``
    where ``s^2`` is the long-run variance of ``u``.
    """
    e0, e1 = e[1:], e[:-1]
    n = e0.size
    den = float(e1 @ e1)
    rho = float(e0 @ e1) / den
    u = e0 - rho * e1
    L = newey_west_auto_bandwidth(u) if bandwidth == "auto" else int(bandwidth)
    lam = sum((1.0 - j / (L + 1.0)) * _autocov(u, j) for j in range(1, L + 1))
    s2 = _autocov(u, 0) + 2.0 * lam
    rho_star = (float(e0 @ e1) - n * lam) / den
    za = n * (rho_star - 1.0)
    zt = (rho_star - 1.0) / math.sqrt(s2 / den)
    return zt, za, L


def residual_cointegration(y, x, kind: str = "engle_granger", deterministic: str = "c",
                           lags: int | None = None, criterion: str = "sic", max_lags: int | None = None,
                           bandwidth: int | str = "auto") -> EGResult:
    """Engle-Granger or Phillips-Ouliaris test on the static regression of ``y`` on ``x``.

    ``deterministic`` is the cointegrating regression's deterministic set
    (``"n"``, ``"c"`` or ``"ct"``); p-values come from the MacKinnon surfaces
    for ``N = 1 + number of regressors``.
    """
    if kind not in RESIDUAL_KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {RESIDUAL_KINDS}")
    yv = _vec(y)
    xv = np.column_stack([_vec(c) for c in (x if isinstance(x, (list, tuple)) else [x])])
    if yv.size <= 20 or xv.shape[0] != yv.size:
        raise InsufficientData("residual cointegration needs more than 20 aligned observations")
    N = 1 + xv.shape[1]
    X = np.column_stack(_det(yv.size, deterministic) + [xv])
    e = _static_residuals(yv, X)
    if kind == "engle_granger":
        f = _adf(e, "n", lags, criterion, max_lags)
        tau = f.tstat
        z = f.nobs * f.gamma / (1.0 - float(np.sum(f.delta)))
        p = f.lags
        nobs = f.nobs
    else:
        tau, z, p = phillips_ouliaris_stats(e, bandwidth)
        nobs = e.size - 1
    key_t = cv.CriticalValueKey("coint_df", deterministic, N, nobs)
    key_z = cv.CriticalValueKey("coint_z", deterministic, N, nobs)
    name = getattr(y, "name", "y")
    return EGResult(kind, name, float(tau), float(z), (cv.p_value(key_t, tau), cv.p_value(key_z, z)), p,
                    cv.critical_values(key_t, LEVELS))


# ---------------------------------------------------------------------------
# Johansen


@dataclass(frozen=True)
class JohansenResult:
    """Reduced-rank regression eigenvalues with trace and maximum-eigenvalue tests.

    Entry ``r`` of each vector tests the null of at most ``r`` cointegrating
    relations.
    """

    case: str
    var_lags: int
    nobs: int
    eigenvalues: np.ndarray
    trace: np.ndarray
    max_eigen: np.ndarray
    trace_critical_5pct: np.ndarray
    max_eigen_critical_5pct: np.ndarray
    trace_p_values: np.ndarray
    max_eigen_p_values: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    loglik_by_rank: np.ndarray = field(repr=False)

    @property
    def rank_trace(self) -> int:
        for r, (s, c) in enumerate(zip(self.trace, self.trace_critical_5pct)):
            if not s > c:
                return r
        return self.trace.size

    @property
    def rank_max_eigen(self) -> int:
        for r, (s, c) in enumerate(zip(self.max_eigen, self.max_eigen_critical_5pct)):
            if not s > c:
                return r
        return self.max_eigen.size


def _partial(Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    if Z.shape[1] == 0:
        return Y
    return Y - Z @ np.linalg.lstsq(Z, Y, rcond=None)[0]


def _johansen_core(Y: np.ndarray, p: int, case: str):
    T_all, n = Y.shape
    dY = np.diff(Y, axis=0)
    rows = np.arange(p, T_all)
    T = rows.size
    U, Rr = cv.johansen_deterministics(case, T, t0=p + 1)
    lagged = [dY[rows - 1 - j] for j in range(1, p)]
    Z = np.column_stack([U] + lagged) if lagged else U
    R0 = _partial(dY[rows - 1], Z)
    lev = Y[rows - 1]
    if Rr.shape[1]:
        lev = np.column_stack([lev, Rr])
    R1 = _partial(lev, Z)
    S00 = R0.T @ R0 / T
    S01 = R0.T @ R1 / T
    S11 = R1.T @ R1 / T
    if max(np.linalg.cond(S00), np.linalg.cond(S11)) > 1e12:
        raise SingularSystem("moment matrices are singular")
    try:
        L11 = linalg.cholesky(S11, lower=True)
        S00i = linalg.solve(S00, S01, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        raise SingularSystem("moment matrices are singular") from None
    Li = linalg.solve_triangular(L11, np.eye(L11.shape[0]), lower=True)
    M = Li @ (S01.T @ S00i) @ Li.T
    lam, vec = linalg.eigh((M + M.T) / 2)
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order][:n], 0.0, 1.0 - 1e-15)
    beta = (Li.T @ vec[:, order])[:, :n]
    return lam, beta, T, S00, U.shape[1], Rr.shape[1]


def johansen(frame: Frame | np.ndarray, var_lags: int = 2, det_case: str = "unrestricted_constant") -> JohansenResult:
    """Johansen trace and maximum-eigenvalue tests for a levels VAR with ``var_lags`` lags.

    ``det_case`` takes the names in :data:`JOHANSEN_CASES` or the case numbers
    ``"1"`` to ``"5"``.
    """
    case = JOHANSEN_CASES.get(det_case, det_case)
    if case not in cv._JOH_CASES:
        raise ValueError(f"unknown deterministic case {det_case!r}")
    if var_lags < 1:
        raise ValueError("var_lags must be >= 1")
    Y = frame.values() if isinstance(frame, Frame) else np.asarray(frame, dtype=float)
    n = Y.shape[1]
    if n < 2:
        raise ValueError("johansen needs at least two series")
    if Y.shape[0] - var_lags <= n * var_lags + 4:
        raise InsufficientData(f"{Y.shape[0]} observations for a {n}-variable VAR({var_lags})")
    lam, beta, T, S00, _, _ = _johansen_core(Y, var_lags, case)
    logs = np.log1p(-lam)
    trace = np.array([-T * np.sum(logs[r:]) for r in range(n)])
    maxeig = np.array([-T * logs[r] for r in range(n)])
    tcv, mcv, tp, mp = (np.empty(n) for _ in range(4))
    for r in range(n):
        m = n - r
        kt = cv.CriticalValueKey("johansen_trace", case, m)
        km = cv.CriticalValueKey("johansen_maxeig", case, m)
        tcv[r] = cv.critical_values(kt, (0.05,))[0.05]
        mcv[r] = cv.critical_values(km, (0.05,))[0.05]
        tp[r] = cv.p_value(kt, trace[r])
        mp[r] = cv.p_value(km, maxeig[r])
    _, logdet = np.linalg.slogdet(S00)
    ll0 = -0.5 * T * (n * (1.0 + math.log(2 * math.pi)) + logdet)
    ll = np.array([ll0 - 0.5 * T * np.sum(logs[:r]) for r in range(n + 1)])
    return JohansenResult(case, var_lags, T, lam, trace, maxeig, tcv, mcv, tp, mp, beta, ll)


def johansen_information_table(frame: Frame | np.ndarray, var_lags: int = 2) -> dict[str, np.ndarray]:
    """Per-observation AIC and SC by rank (rows ``0..n``) and case (columns 1..5)."""
    Y = frame.values() if isinstance(frame, Frame) else np.asarray(frame, dtype=float)
    n = Y.shape[1]
    aic = np.full((n + 1, 5), np.nan)
    sc = np.full((n + 1, 5), np.nan)
    ll_tab = np.full((n + 1, 5), np.nan)
    for c in range(5):
        case = str(c + 1)
        lam, _, T, S00, nu, nr = _johansen_core(Y, var_lags, case)
        _, logdet = np.linalg.slogdet(S00)
        ll0 = -0.5 * T * (n * (1.0 + math.log(2 * math.pi)) + logdet)
        for r in range(n + 1):
            ll = ll0 - 0.5 * T * np.sum(np.log1p(-lam[:r]))
            k = n * n * (var_lags - 1) + n * nu + r * (n + nr) + n * r - r * r
            ll_tab[r, c] = ll
            aic[r, c] = -2 * ll / T + 2 * k / T
            sc[r, c] = -2 * ll / T + k * math.log(T) / T
    return {"loglik": ll_tab, "aic": aic, "sc": sc}


# ---------------------------------------------------------------------------
# Gregory-Hansen


@dataclass(frozen=True)
class GHResult:
    """Infimum ADF, ``Z_t`` and ``Z_alpha`` over the break grid.

    Break indices are 0-based positions of the first post-break observation.
    """

    model: str
    adf_star: float
    zt_star: float
    za_star: float
    break_index: tuple[int, int, int]
    break_dates: tuple[MonthStamp, MonthStamp, MonthStamp] | None
    critical_values: Mapping[str, Mapping[float, float]]
    grid: Mapping[int, tuple[float, float, float]] = field(repr=False, default_factory=dict)

    def rejects(self, statistic: str, level: float = 0.05) -> bool:
        value = {"adf": self.adf_star, "zt": self.zt_star, "za": self.za_star}[statistic]
        return value < self.critical_values[statistic][level]


def gh_design(x: np.ndarray, tb: int, model: str) -> np.ndarray:
    n = x.shape[0]
    t = np.arange(1, n + 1, dtype=float)
    du = (np.arange(n) >= tb).astype(float)
    cols = [np.ones(n), du]
    code = GH_MODELS[model]
    if "T" in code:
        cols.append(t)
    cols.append(x)
    if "S" in code:
        cols.append(x * du[:, None])
    return np.column_stack(cols)


def gh_statistics(y: np.ndarray, x: np.ndarray, tb: int, model: str, lags: int | None = None,
                  criterion: str = "sic", max_lags: int | None = None,
                  bandwidth: int | str = "auto") -> tuple[float, float, float]:
    """ADF, ``Z_t`` and ``Z_alpha`` of the residuals for one break position."""
    e = _static_residuals(y, gh_design(x, tb, model))
    adf_t = _adf(e, "n", lags, criterion, max_lags).tstat
    zt, za, _ = phillips_ouliaris_stats(e, bandwidth)
    return adf_t, zt, za


def gregory_hansen(y, x, model: str = "break_regime_trend", trimming: float = 0.15, lags: int | None = None,
                   criterion: str = "sic", max_lags: int | None = None,
                   bandwidth: int | str = "auto") -> GHResult:
    """Cointegration test allowing one regime shift at an unknown date.

    ``lags=None`` selects the ADF order by ``criterion`` separately at each
    break date.  Each statistic's infimum and its date are reported
    independently; ties go to the earliest date.
    """
    if model not in GH_MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {sorted(GH_MODELS)}")
    yv = _vec(y)
    xv = np.column_stack([_vec(c) for c in (x if isinstance(x, (list, tuple)) else [x])])
    n = yv.size
    grid = {tb: gh_statistics(yv, xv, tb, model, lags, criterion, max_lags, bandwidth)
            for tb in _interior(n, trimming)}
    best = []
    for i in range(3):
        tb, vals = min(grid.items(), key=lambda kv: (kv[1][i], kv[0]))
        best.append((vals[i], tb))
    code = GH_MODELS[model]
    key_t = cv.CriticalValueKey("gh_t", code, xv.shape[1])
    key_z = cv.CriticalValueKey("gh_za", code, xv.shape[1])
    levels = (0.01, 0.05, 0.10)
    tcv = cv.critical_values(key_t, levels)
    crit = {"adf": tcv, "zt": tcv, "za": cv.critical_values(key_z, levels)}
    idx = tuple(b[1] for b in best)
    start = getattr(y, "start", None)
    dates = tuple(start.shift(i) for i in idx) if start is not None else None
    return GHResult(model, best[0][0], best[1][0], best[2][0], idx, dates, crit, grid)
