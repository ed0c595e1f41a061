"""Levels VAR estimation, lag selection, stability and Granger-causality tests.

A :class:`VarFit` stacks equation-by-equation OLS fits that share one design:
deterministics first, then ``y_{t-1}, ..., y_{t-p}`` (each block in column
order), then any extra exogenous lags ``y_{t-p-1}, ..., y_{t-p-d}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg, stats

from .dataframe import Frame
from .errors import InsufficientData
from .linreg import OlsFit, TestResult, chi2_result, ols, wald_test, zero_restrictions

DETERMINISTICS = ("none", "const", "const_trend")


@dataclass(frozen=True)
class VarFit:
    """Reduced-form VAR(p) estimated by OLS on a common sample.

    Attributes
    ----------
    coefs : ndarray, shape (p, n, n)
        ``coefs[i]`` is ``A_{i+1}``; row = equation.
    exog_coefs : ndarray, shape (n, m_exog)
        Deterministic and extra-lag coefficients.
    sigma : ndarray
        Residual covariance with divisor ``T``.
    sigma_dfadj : ndarray
        Residual covariance with divisor ``T - m`` (``m`` regressors per equation).
    """

    names: tuple[str, ...]
    p: int
    deterministics: str
    extra_exog_lags: int
    coefs: np.ndarray = field(repr=False)
    exog_coefs: np.ndarray = field(repr=False)
    exog_names: tuple[str, ...]
    regressor_names: tuple[str, ...]
    equations: tuple[OlsFit, ...] = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    sigma_dfadj: np.ndarray = field(repr=False)
    loglik: float
    aic: float
    sc: float
    hq: float
    fpe: float
    nobs: int
    first_row: int
    data: np.ndarray = field(repr=False)
    exog: np.ndarray = field(repr=False)

    @property
    def neqs(self) -> int:
        return len(self.names)

    @property
    def k_per_equation(self) -> int:
        return len(self.regressor_names)

    def equation(self, name: str) -> OlsFit:
        return self.equations[self.names.index(name)]

    def companion(self) -> np.ndarray:
        n, p = self.neqs, self.p
        C = np.zeros((n * p, n * p))
        C[:n] = np.hstack(list(self.coefs))
        if p > 1:
            C[n:, :-n] = np.eye(n * (p - 1))
        return C

    def ma_coefficients(self, H: int) -> np.ndarray:
        """``Phi_0 .. Phi_H`` of the moving-average representation."""
        n = self.neqs
        phi = np.zeros((H + 1, n, n))
        phi[0] = np.eye(n)
        for h in range(1, H + 1):
            for i in range(1, min(h, self.p) + 1):
                phi[h] += phi[h - i] @ self.coefs[i - 1]
        return phi


def _exog_matrix(T: int, rows: np.ndarray, det: str) -> tuple[np.ndarray, list[str]]:
    cols, names = [], []
    if det in ("const", "const_trend"):
        cols.append(np.ones(rows.size))
        names.append("const")
    if det == "const_trend":
        cols.append(rows + 1.0)
        names.append("trend")
    return (np.column_stack(cols) if cols else np.zeros((rows.size, 0))), names


def _design(Y: np.ndarray, names: Sequence[str], p: int, det: str, d: int, start: int,
            exog: np.ndarray | None, exog_names: Sequence[str]):
    T = Y.shape[0]
    rows = np.arange(start, T)
    D, dn = _exog_matrix(T, rows, det)
    blocks = [D]
    rn = list(dn)
    for l in range(1, p + 1):
        blocks.append(Y[rows - l])
        rn += [f"{v}(-{l})" for v in names]
    for l in range(p + 1, p + d + 1):
        blocks.append(Y[rows - l])
        rn += [f"{v}(-{l})" for v in names]
    if exog is not None:
        blocks.append(exog[rows])
        rn += list(exog_names)
    return rows, np.column_stack(blocks), rn, len(dn)


def fit_var(frame: Frame | np.ndarray, p: int, deterministics: str = "const", extra_exog_lags: int = 0,
            names: Sequence[str] | None = None, start: int | None = None,
            exog: np.ndarray | None = None, exog_names: Sequence[str] = ()) -> VarFit:
    """Fit a VAR(p) by per-equation OLS.

    ``extra_exog_lags`` appends lags ``p+1..p+d`` of every variable as
    unrestricted exogenous regressors.  ``start`` fixes the first usable row
    (default ``p + extra_exog_lags``) so that several orders can share a sample.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    if deterministics not in DETERMINISTICS:
        raise ValueError(f"deterministics must be one of {DETERMINISTICS}")
    if isinstance(frame, Frame):
        Y, names = frame.values(), tuple(frame.names)
    else:
        Y = np.asarray(frame, dtype=float)
        Y = Y[:, None] if Y.ndim == 1 else Y
        names = tuple(names or (f"y{i}" for i in range(Y.shape[1])))
    T_all, n = Y.shape
    d = extra_exog_lags
    start = p + d if start is None else start
    if start < p + d:
        raise ValueError("start leaves too few pre-sample observations")
    rows, X, rn, ndet = _design(Y, names, p, deterministics, d, start, exog, exog_names)
    T, m = X.shape
    if T <= m:
        raise InsufficientData(f"{T} observations for {m} regressors per equation")
    eqs = tuple(ols(Y[rows, i], X, rn) for i in range(n))
    B = np.array([e.coefficients for e in eqs])
    coefs = np.stack([B[:, ndet + l * n: ndet + (l + 1) * n] for l in range(p)]) if p else np.zeros((0, n, n))
    exog_idx = list(range(ndet)) + list(range(ndet + p * n, m))
    U = np.column_stack([e.residuals for e in eqs])
    sigma = U.T @ U / T
    sigma_adj = U.T @ U / (T - m)
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        logdet = -math.inf
    ll = -0.5 * T * (n * (1.0 + math.log(2 * math.pi)) + logdet)
    K = n * m
    aic = -2 * ll / T + 2 * K / T
    sc = -2 * ll / T + K * math.log(T) / T
    hq = -2 * ll / T + 2 * K * math.log(math.log(T)) / T
    fpe = math.exp(logdet) * ((T + m) / (T - m)) ** n
    return VarFit(
        names=names, p=p, deterministics=deterministics, extra_exog_lags=d, coefs=coefs,
        exog_coefs=B[:, exog_idx], exog_names=tuple(rn[i] for i in exog_idx), regressor_names=tuple(rn),
        equations=eqs, residuals=U, sigma=sigma, sigma_dfadj=sigma_adj, loglik=ll, aic=aic, sc=sc, hq=hq,
        fpe=fpe, nobs=T, first_row=start, data=Y, exog=X[:, exog_idx],
    )


@dataclass(frozen=True)
class SelectionTable:
    """Lag-order criteria on a common sample; ``selected`` maps criterion to lag."""

    lags: np.ndarray
    loglik: np.ndarray
    lr: np.ndarray
    lr_p_value: np.ndarray
    fpe: np.ndarray
    aic: np.ndarray
    sc: np.ndarray
    hq: np.ndarray
    nobs: int
    params_per_equation: np.ndarray
    selected: Mapping[str, int]

    def rows(self) -> list[dict]:
        out = []
        for i, p in enumerate(self.lags):
            row = {"lag": int(p), "loglik": float(self.loglik[i]), "lr": float(self.lr[i]),
                   "fpe": float(self.fpe[i]), "aic": float(self.aic[i]), "sc": float(self.sc[i]),
                   "hq": float(self.hq[i])}
            row["selected"] = sorted(c for c, l in self.selected.items() if l == p)
            out.append(row)
        return out


def select_lag_order(frame: Frame | np.ndarray, max_lag: int = 12, deterministics: str = "const_trend",
                     level: float = 0.05) -> SelectionTable:
    """VAR lag-order criteria for ``p = 0..max_lag`` on the ``max_lag``-truncated sample.

    The LR column is ``(T - m) (ln|S_{p-1}| - ln|S_p|)`` against chi2(n^2);
    the sequence descends from ``max_lag`` and stops at the first rejection.
    """
    fits = [fit_var(frame, p, deterministics, start=max_lag) for p in range(max_lag + 1)]
    n = fits[0].neqs
    T = fits[0].nobs
    logdet = np.array([np.linalg.slogdet(f.sigma)[1] for f in fits])
    m = np.array([f.k_per_equation for f in fits])
    lr = np.full(max_lag + 1, np.nan)
    lrp = np.full(max_lag + 1, np.nan)
    for p in range(1, max_lag + 1):
        lr[p] = (T - m[p]) * (logdet[p - 1] - logdet[p])
        lrp[p] = stats.chi2.sf(lr[p], n * n)
    lr_sel = 0
    for p in range(max_lag, 0, -1):
        if lrp[p] < level:
            lr_sel = p
            break
    tab = {c: np.array([getattr(f, c) for f in fits]) for c in ("loglik", "fpe", "aic", "sc", "hq")}
    selected = {c: int(np.argmin(tab[c])) for c in ("fpe", "aic", "sc", "hq")}
    selected["lr"] = lr_sel
    return SelectionTable(np.arange(max_lag + 1), tab["loglik"], lr, lrp, tab["fpe"], tab["aic"], tab["sc"],
                          tab["hq"], T, m, selected)


@dataclass(frozen=True)
class StabilityRoots:
    roots: np.ndarray
    moduli: np.ndarray

    @property
    def stable(self) -> bool:
        return bool(np.all(self.moduli < 1.0))


def stability_roots(fit: VarFit) -> StabilityRoots:
    """Eigenvalues of the companion matrix (inverse characteristic roots), largest modulus first."""
    if fit.p == 0:
        return StabilityRoots(np.zeros(0, complex), np.zeros(0))
    ev = np.linalg.eigvals(fit.companion())
    order = np.lexsort((-ev.imag, -ev.real, -np.abs(ev)))
    ev = ev[order]
    return StabilityRoots(ev, np.abs(ev))


def _lag_names(fit: VarFit, var: str) -> list[str]:
    return [f"{var}(-{l})" for l in range(1, fit.p + 1)]


def block_exogeneity(fit: VarFit) -> dict[str, dict[str, TestResult]]:
    """Wald chi2 tests that all ``p`` lags of each other variable vanish, per equation.

    Extra exogenous lags are never restricted.  ``"All"`` restricts every
    other variable jointly.
    """
    if fit.p == 0:
        raise ValueError("a VAR(0) has no lagged endogenous terms")
    out: dict[str, dict[str, TestResult]] = {}
    for i, eq_name in enumerate(fit.names):
        eq = fit.equations[i]
        others = [v for v in fit.names if v != eq_name]
        rows = {}
        for v in others:
            R = zero_restrictions(eq, _lag_names(fit, v))
            rows[v] = wald_test(eq, R, form="chi2", name=f"{v} -> {eq_name}")
        R = zero_restrictions(eq, [nm for v in others for nm in _lag_names(fit, v)])
        rows["All"] = wald_test(eq, R, form="chi2", name=f"All -> {eq_name}")
        out[eq_name] = rows
    return out


@dataclass(frozen=True)
class TYResult:
    k: int
    d_max: int
    fit: VarFit = field(repr=False)
    wald: Mapping[str, TestResult]
    table: Mapping[str, Mapping[str, TestResult]] = field(repr=False)

    def causes(self, source: str, target: str, level: float = 0.05) -> bool:
        return self.wald[f"{source} -> {target}"].p_value < level

    def verdict(self, level: float = 0.05) -> str:
        a, b = self.fit.names[:2]
        ab, ba = self.causes(a, b, level), self.causes(b, a, level)
        if ab and ba:
            return "bidirectional"
        if ab:
            return f"{a} -> {b}"
        if ba:
            return f"{b} -> {a}"
        return "none"


def toda_yamamoto(frame: Frame | np.ndarray, k: int, d_max: int, deterministics: str = "const") -> TYResult:
    """Toda-Yamamoto causality: VAR(k) plus ``d_max`` unrestricted extra lags, Wald chi2(k)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if d_max not in (0, 1, 2):
        raise ValueError("d_max must be 0, 1 or 2")
    fit = fit_var(frame, k, deterministics, extra_exog_lags=d_max)
    table = block_exogeneity(fit)
    wald = {}
    for target, rows in table.items():
        for src, res in rows.items():
            if src != "All":
                wald[f"{src} -> {target}"] = res
    return TYResult(k, d_max, fit, wald, table)


def portmanteau(fit: VarFit, lags: int, adjusted: bool = True) -> TestResult:
    """Multivariate (adjusted) portmanteau test on the VAR residuals, chi2 with ``n^2 (h - p)`` df."""
    if lags <= fit.p:
        raise InsufficientData(f"portmanteau needs lags > p = {fit.p}")
    U = fit.residuals
    T, n = U.shape
    C0 = U.T @ U / T
    C0i = linalg.inv(C0)
    q = 0.0
    for j in range(1, lags + 1):
        Cj = U[j:].T @ U[:-j] / T
        term = float(np.trace(Cj.T @ C0i @ Cj @ C0i))
        q += term / (T - j) if adjusted else term
    q *= T * T if adjusted else T
    df = n * n * (lags - fit.p)
    return chi2_result("portmanteau_adjusted" if adjusted else "portmanteau", q, df, lags=lags)
