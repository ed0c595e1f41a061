"""Least squares estimation, HAC covariance and linear-restriction tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg, stats

from .errors import BandwidthTooLarge, InsufficientData, RankDeficient, SingularRestrictionCovariance

LEVELS = (0.01, 0.05, 0.10)
RANK_TOL = 1e-10


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test.

    ``distribution`` is a descriptor such as ``"chi2(3)"``, ``"F(7,305)"`` or
    the id of a nonstandard table.  ``lower_tail`` tells which side rejects when
    only critical values are available.
    """

    name: str
    statistic: float
    distribution: str
    p_value: float | None = None
    critical_values: Mapping[float, float] | None = None
    lower_tail: bool = False
    extra: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")

    @property
    def reject_at(self) -> frozenset[float]:
        if self.critical_values:
            if self.lower_tail:
                hit = {a for a, c in self.critical_values.items() if self.statistic < c}
            else:
                hit = {a for a, c in self.critical_values.items() if self.statistic > c}
            return frozenset(hit)
        if self.p_value is not None:
            return frozenset(a for a in LEVELS if self.p_value < a)
        return frozenset()

    def rejects(self, level: float = 0.05) -> bool:
        if self.critical_values and level in self.critical_values:
            return level in self.reject_at
        if self.p_value is not None:
            return self.p_value < level
        raise ValueError(f"no critical value or p-value for level {level}")

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "statistic": self.statistic,
            "distribution": self.distribution,
            "p_value": self.p_value,
        }
        if self.critical_values:
            d["critical_values"] = {str(k): v for k, v in sorted(self.critical_values.items())}
        d["reject_at"] = sorted(self.reject_at)
        d.update({k: v for k, v in self.extra.items() if isinstance(v, (int, float, str, bool))})
        return d


def chi2_result(name: str, stat: float, df: int, **extra) -> TestResult:
    return TestResult(name, float(stat), f"chi2({df})", float(stats.chi2.sf(stat, df)), extra=extra)


def f_result(name: str, stat: float, df1: int, df2: int, **extra) -> TestResult:
    return TestResult(name, float(stat), f"F({df1},{df2})", float(stats.f.sf(stat, df1, df2)), extra=extra)


@dataclass(frozen=True)
class OlsFit:
    y: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    names: tuple[str, ...]
    coefficients: np.ndarray
    covariance: np.ndarray = field(repr=False)
    covariance_kind: str
    residuals: np.ndarray = field(repr=False)
    ssr: float
    sigma2: float
    loglik: float
    aic: float
    sc: float
    hq: float
    n: int
    k: int
    bandwidth: int | None = None

    @property
    def df_resid(self) -> int:
        return self.n - self.k

    @property
    def fitted(self) -> np.ndarray:
        return self.y - self.residuals

    @property
    def bse(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))

    @property
    def tvalues(self) -> np.ndarray:
        return self.coefficients / self.bse

    @property
    def pvalues(self) -> np.ndarray:
        return 2 * stats.t.sf(np.abs(self.tvalues), self.df_resid)

    @property
    def r2(self) -> float:
        d = self.y - self.y.mean()
        tss = float(d @ d)
        return 1.0 - self.ssr / tss if tss > 0 else float("nan")

    @property
    def has_constant(self) -> bool:
        return bool(np.any(np.all(self.X == self.X[0], axis=0) & (self.X[0] != 0)))

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def index(self, name: str) -> int:
        return self.names.index(name)

    def ordinary_covariance(self) -> np.ndarray:
        return self.sigma2 * _xtx_inv(self.X)

    def with_hac(self, bandwidth: int | str = "auto", df_adjust: bool = True) -> "OlsFit":
        cov, bw = _hac(self, bandwidth, df_adjust)
        return replace(self, covariance=cov, covariance_kind="hac", bandwidth=bw)

    def table(self) -> list[dict]:
        return [
            {"variable": nm, "coefficient": float(b), "std_error": float(s), "t_statistic": float(t), "p_value": float(p)}
            for nm, b, s, t, p in zip(self.names, self.coefficients, self.bse, self.tvalues, self.pvalues)
        ]


def _xtx_inv(X: np.ndarray) -> np.ndarray:
    r = linalg.qr(X, mode="r")[0][: X.shape[1]]
    rinv = linalg.solve_triangular(r, np.eye(r.shape[0]))
    return rinv @ rinv.T


def information_criteria(loglik: float, n: int, k: int) -> tuple[float, float, float]:
    """Per-observation AIC, Schwarz and Hannan-Quinn criteria."""
    base = -2.0 * loglik / n
    return base + 2.0 * k / n, base + k * math.log(n) / n, base + 2.0 * k * math.log(math.log(n)) / n


def ols(y, X, names: Sequence[str] | None = None) -> OlsFit:
    """Least squares of ``y`` on the columns of ``X`` via QR.

    A column whose residual norm after projection on the preceding columns is
    below ``1e-10`` times its own norm is reported as dependent.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if names is None:
        names = tuple(f"x{i}" for i in range(k))
    names = tuple(names)
    if len(names) != k:
        raise ValueError("names do not match the number of columns")
    if y.size != n:
        raise ValueError(f"y has {y.size} rows, X has {n}")
    if n <= k:
        raise InsufficientData(f"{n} observations for {k} regressors")
    q, r = linalg.qr(X, mode="economic")
    col_norm = np.linalg.norm(X, axis=0)
    bad = [names[j] for j in range(k) if abs(r[j, j]) <= RANK_TOL * max(col_norm[j], np.finfo(float).tiny)]
    if bad:
        raise RankDeficient(bad)
    beta = linalg.solve_triangular(r, q.T @ y)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    sigma2 = ssr / (n - k)
    rinv = linalg.solve_triangular(r, np.eye(k))
    cov = sigma2 * (rinv @ rinv.T)
    loglik = -0.5 * n * (1.0 + math.log(2 * math.pi) + math.log(ssr / n)) if ssr > 0 else math.inf
    if math.isfinite(loglik):
        aic, sc, hq = information_criteria(loglik, n, k)
    else:
        aic = sc = hq = -math.inf
    return OlsFit(
        y=y, X=X, names=names, coefficients=beta, covariance=cov, covariance_kind="ordinary",
        residuals=resid, ssr=ssr, sigma2=sigma2, loglik=loglik, aic=aic, sc=sc, hq=hq, n=n, k=k,
    )


def newey_west_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def _hac(fit: OlsFit, bandwidth, df_adjust: bool):
    n, k = fit.X.shape
    L = newey_west_bandwidth(n) if bandwidth == "auto" else int(bandwidth)
    if L < 0:
        raise ValueError("bandwidth must be nonnegative")
    if L >= n:
        raise BandwidthTooLarge(f"bandwidth {L} >= n = {n}")
    u = fit.X * fit.residuals[:, None]
    s = u.T @ u
    for j in range(1, L + 1):
        g = u[j:].T @ u[:-j]
        s += (1.0 - j / (L + 1.0)) * (g + g.T)
    xi = _xtx_inv(fit.X)
    cov = xi @ s @ xi
    if df_adjust:
        cov *= n / (n - k)
    return (cov + cov.T) / 2, L


def hac_covariance(fit: OlsFit, bandwidth: int | str = "auto", df_adjust: bool = True) -> np.ndarray:
    """Newey-West covariance with Bartlett weights ``1 - j/(L+1)``.

    ``bandwidth="auto"`` uses ``floor(4 (n/100)^(2/9))``.  ``df_adjust`` scales
    by ``n/(n-k)``; bandwidth 0 gives the White estimator.
    """
    return _hac(fit, bandwidth, df_adjust)[0]


def wald_test(fit: OlsFit, R, r=None, form: str = "F", name: str = "wald") -> TestResult:
    """Wald test of ``R b = r`` using the fit's covariance."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    q = R.shape[0]
    if R.shape[1] != fit.k:
        raise ValueError(f"R has {R.shape[1]} columns, model has {fit.k} coefficients")
    r = np.zeros(q) if r is None else np.asarray(r, dtype=float).ravel()
    if np.linalg.matrix_rank(R) < q:
        raise ValueError("restriction matrix must have full row rank")
    d = R @ fit.coefficients - r
    m = R @ fit.covariance @ R.T
    try:
        c = linalg.cho_factor(m)
        w = float(d @ linalg.cho_solve(c, d))
    except linalg.LinAlgError:
        raise SingularRestrictionCovariance("R V R' is not positive definite") from None
    w = max(w, 0.0)
    if form == "F":
        return f_result(name, w / q, q, fit.df_resid)
    if form == "chi2":
        return chi2_result(name, w, q)
    raise ValueError(f"unknown form {form!r}")


def zero_restrictions(fit: OlsFit, names: Sequence[str]) -> np.ndarray:
    R = np.zeros((len(names), fit.k))
    for i, nm in enumerate(names):
        R[i, fit.index(nm)] = 1.0
    return R


def incremental_f(restricted_ssr: float, fit: OlsFit, q: int, name: str) -> TestResult:
    """F statistic comparing nested models through their residual sums of squares."""
    stat = ((restricted_ssr - fit.ssr) / q) / (fit.ssr / fit.df_resid)
    return f_result(name, max(stat, 0.0), q, fit.df_resid)


def lagmat(x: np.ndarray, lags: Sequence[int]) -> np.ndarray:
    """Columns ``x[t - l]`` for each lag, NaN-padded at the start."""
    x = np.asarray(x, dtype=float)
    out = np.full((x.size, len(lags)), np.nan)
    for j, l in enumerate(lags):
        if l == 0:
            out[:, j] = x
        elif l < x.size:
            out[l:, j] = x[:-l]
    return out
