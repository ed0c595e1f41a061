"""Residual diagnostics and recursive-residual stability paths.

Every auxiliary-regression test is a plain :func:`tsecon.linreg.ols` fit of a
transformed residual ``g`` on a design ``Z``; the helpers below only build the
``(g, Z)`` pair.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import linalg, stats

from . import criticalvalues as cv
from .errors import DomainError, InsufficientData, RankDeficient, ZeroVariance
from .linreg import OlsFit, TestResult, f_result, incremental_f, ols

CUSUM_A = {0.01: 1.143, 0.05: 0.948, 0.10: 0.850}


def _check_variance(x: np.ndarray, what: str) -> None:
    if x.size == 0 or np.ptp(x) == 0:
        raise ZeroVariance(f"{what} has zero variance")


def ljung_box(x, lags: int = 10, squared: bool = False) -> TestResult:
    """Ljung-Box portmanteau ``Q = n(n+2) sum r_j^2 / (n-j)`` against chi2(lags)."""
    x = np.asarray(x, dtype=float).ravel()
    if squared:
        x = x**2
    n = x.size
    if lags < 1 or lags >= n / 2:
        raise ValueError(f"lags must be in 1..{math.ceil(n / 2) - 1}")
    _check_variance(x, "input")
    d = x - x.mean()
    c0 = d @ d
    r = np.array([d[j:] @ d[:-j] for j in range(1, lags + 1)]) / c0
    q = n * (n + 2) * np.sum(r**2 / (n - np.arange(1, lags + 1)))
    return TestResult(
        "ljung_box_sq" if squared else "ljung_box", float(q), f"chi2({lags})",
        float(stats.chi2.sf(q, lags)), extra={"lags": lags, "acf": tuple(map(float, r))},
    )


def _overall(name: str, aux: OlsFit, q: int, **extra) -> TestResult:
    """F test that all ``q`` non-constant auxiliary slopes vanish, plus the n R^2 form."""
    r2 = aux.r2
    F = (r2 / q) / ((1.0 - r2) / aux.df_resid) if r2 < 1 else math.inf
    lm = aux.n * r2
    return f_result(name, F, q, aux.df_resid, lm=float(lm), lm_p_value=float(stats.chi2.sf(lm, q)),
                    nobs=aux.n, **extra)


def arch_lm(resid, lags: int = 10) -> TestResult:
    """Engle's ARCH-LM test: ``e_t^2`` on a constant and ``lags`` of itself."""
    e2 = np.asarray(resid, dtype=float).ravel() ** 2
    n = e2.size
    if lags < 1 or lags >= n / 2:
        raise ValueError(f"lags must be in 1..{math.ceil(n / 2) - 1}")
    _check_variance(e2, "squared residuals")
    y = e2[lags:]
    Z = np.column_stack([np.ones(n - lags)] + [e2[lags - j:n - j] for j in range(1, lags + 1)])
    return _overall("arch_lm", ols(y, Z), lags, lags=lags)


def breusch_godfrey(fit: OlsFit, lags: int) -> TestResult:
    """Serial-correlation LM test with zero-padded pre-sample residuals.

    The F form compares the auxiliary regression of ``e`` on ``[X, e_{-1..-h}]``
    with ``e'e``.
    """
    if lags < 1:
        raise ValueError("lags must be >= 1")
    e = fit.residuals
    if float(e @ e) <= 1e-24 * max(1.0, float(fit.y @ fit.y)):
        raise ZeroVariance("residuals are identically zero")
    n = e.size
    L = np.zeros((n, lags))
    for j in range(1, lags + 1):
        L[j:, j - 1] = e[:-j]
    aux = ols(e, np.column_stack([fit.X, L]), fit.names + tuple(f"resid(-{j})" for j in range(1, lags + 1)))
    res = incremental_f(float(e @ e), aux, lags, "breusch_godfrey")
    lm = n * (1.0 - aux.ssr / float(e @ e))
    return TestResult(res.name, res.statistic, res.distribution, res.p_value,
                      extra={"lm": lm, "lm_p_value": float(stats.chi2.sf(lm, lags)), "lags": lags})


def ramsey_reset(fit: OlsFit, powers: Iterable[int] = (2,)) -> TestResult:
    """RESET: F test on added powers of the fitted values."""
    powers = sorted(set(powers))
    if not powers or not set(powers) <= {2, 3, 4}:
        raise ValueError("powers must be a nonempty subset of {2, 3, 4}")
    q = len(powers)
    yhat = fit.fitted
    scale = max(1.0, float(fit.y @ fit.y))
    if fit.ssr <= 1e-24 * scale:
        return f_result("ramsey_reset", 0.0, q, fit.df_resid - q, powers=str(powers))
    extra = np.column_stack([yhat**p for p in powers])
    # Rescaling the added columns leaves the F statistic unchanged and keeps
    # the QR rank check meaningful.
    extra = extra / np.max(np.abs(extra), axis=0)
    aux = ols(fit.y, np.column_stack([fit.X, extra]), fit.names + tuple(f"fitted^{p}" for p in powers))
    res = incremental_f(fit.ssr, aux, q, "ramsey_reset")
    return TestResult(res.name, res.statistic, res.distribution, res.p_value, extra={"powers": str(powers)})


def _constant_index(X: np.ndarray) -> int | None:
    hits = np.flatnonzero(np.all(X == X[0], axis=0) & (X[0] != 0))
    return int(hits[0]) if hits.size else None


def _independent_columns(Z: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Keep columns of ``Z`` that add rank, in order."""
    keep: list[int] = []
    for j in range(Z.shape[1]):
        trial = Z[:, keep + [j]]
        r = linalg.qr(trial, mode="r")[0]
        if abs(r[len(keep), len(keep)]) > tol * max(np.linalg.norm(Z[:, j]), np.finfo(float).tiny):
            keep.append(j)
    return np.array(keep, dtype=int)


def white_design(X: np.ndarray) -> np.ndarray:
    """Constant, regressors, their squares and cross-products, without dependent columns."""
    n = X.shape[0]
    ci = _constant_index(X)
    base = [X[:, j] for j in range(X.shape[1]) if j != ci]
    cols = [np.ones(n)] + base
    for i in range(len(base)):
        for j in range(i, len(base)):
            cols.append(base[i] * base[j])
    Z = np.column_stack(cols)
    return Z[:, _independent_columns(Z)]


def het_design(X: np.ndarray) -> np.ndarray:
    """Regressors with a constant guaranteed to be present in the first column."""
    ci = _constant_index(X)
    rest = [X[:, j] for j in range(X.shape[1]) if j != ci]
    return np.column_stack([np.ones(X.shape[0])] + rest)


HET_KINDS = ("bpg", "white", "harvey", "glejser")


def het_test(fit: OlsFit, kind: str = "bpg", drop_tolerance: float = 0.01) -> TestResult:
    """Heteroskedasticity test as an auxiliary regression of ``g(e)`` on ``Z``.

    ========  ============  ===============================
    kind      g(e)          Z
    ========  ============  ===============================
    bpg       e^2           X
    white     e^2           X, squares and cross-products
    harvey    log(e^2)      X
    glejser   abs(e)        X
    ========  ============  ===============================

    The auxiliary regression always carries a constant; the reported F tests
    its remaining slopes.  Harvey drops exact-zero residuals when they are
    fewer than ``drop_tolerance`` of the sample.
    """
    if kind not in HET_KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {HET_KINDS}")
    e = fit.residuals
    Z = white_design(fit.X) if kind == "white" else het_design(fit.X)
    if kind in ("bpg", "white"):
        g = e**2
    elif kind == "glejser":
        g = np.abs(e)
    else:
        zero = np.abs(e) <= 1e-14 * max(1.0, float(np.max(np.abs(fit.y))))
        if zero.any():
            if zero.mean() >= drop_tolerance:
                raise DomainError("log of zero residual", int(np.flatnonzero(zero)[0]))
            e, Z = e[~zero], Z[~zero]
        g = np.log(e**2)
    _check_variance(g, f"{kind} auxiliary dependent variable")
    aux = ols(g, Z)
    return _overall(kind, aux, Z.shape[1] - 1)


def recursive_residuals(fit: OlsFit) -> np.ndarray:
    """Standardized one-step-ahead prediction errors ``w_r``, ``r = k+1..n``."""
    X, y = fit.X, fit.y
    n, k = X.shape
    if n <= k + 1:
        raise InsufficientData(f"recursive residuals need n > k + 1 (n={n}, k={k})")
    w = np.empty(n - k)
    for i, r in enumerate(range(k, n)):
        Xr, yr = X[:r], y[:r]
        q, R = linalg.qr(Xr, mode="economic")
        if np.min(np.abs(np.diag(R))) <= 1e-10 * np.max(np.abs(np.diag(R))):
            raise RankDeficient([f"first {r} rows"])
        b = linalg.solve_triangular(R, q.T @ yr)
        z = linalg.solve_triangular(R, X[r], trans="T")
        w[i] = (y[r] - X[r] @ b) / math.sqrt(1.0 + z @ z)
    return w


@dataclass(frozen=True)
class CusumPath:
    """CUSUM or CUSUM-of-squares path with its significance bands.

    ``steps`` holds the 1-based observation index ``r = k+1..n``.
    """

    kind: str
    level: float
    steps: np.ndarray = field(repr=False)
    statistic_path: np.ndarray = field(repr=False)
    lower_band: np.ndarray = field(repr=False)
    upper_band: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.steps.size

    @property
    def inside(self) -> bool:
        return bool(np.all((self.statistic_path > self.lower_band) & (self.statistic_path < self.upper_band)))

    @property
    def crossings(self) -> np.ndarray:
        return self.steps[(self.statistic_path <= self.lower_band) | (self.statistic_path >= self.upper_band)]

    def rows(self) -> list[tuple[int, float, float, float]]:
        return [(int(s), float(v), float(lo), float(hi)) for s, v, lo, hi in
                zip(self.steps, self.statistic_path, self.lower_band, self.upper_band)]

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "statistic", "lower", "upper"])
            for s, v, lo, hi in self.rows():
                w.writerow([s, f"{v:.10g}", f"{lo:.10g}", f"{hi:.10g}"])


def cusum(fit: OlsFit, kind: str = "cusum", level: float = 0.05) -> CusumPath:
    """Brown-Durbin-Evans CUSUM or CUSUM-of-squares of the recursive residuals."""
    if kind not in ("cusum", "cusumq"):
        raise ValueError(f"unknown kind {kind!r}")
    w = recursive_residuals(fit)
    n, k = fit.X.shape
    m = n - k
    steps = np.arange(k + 1, n + 1)
    if kind == "cusum":
        if level not in CUSUM_A:
            raise ValueError(f"cusum bands available at levels {sorted(CUSUM_A)}")
        if m < 2:
            raise InsufficientData("cusum needs at least two recursive residuals")
        s = np.std(w, ddof=1)
        if s == 0:
            raise ZeroVariance("recursive residuals are constant")
        path = np.cumsum(w) / s
        a = CUSUM_A[level]
        half = a * math.sqrt(m) + 2.0 * a * (steps - k) / math.sqrt(m)
        return CusumPath(kind, level, steps, path, -half, half)
    w2 = w**2
    tot = w2.sum()
    if tot == 0:
        raise ZeroVariance("recursive residuals are identically zero")
    path = np.cumsum(w2) / tot
    path[-1] = 1.0
    line = (steps - k) / m
    c0 = cv.cusumq_c0(m, level)
    return CusumPath(kind, level, steps, path, line - c0, line + c0)
