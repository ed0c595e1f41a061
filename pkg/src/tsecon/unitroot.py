"""Unit-root battery: ADF, DF-GLS, Phillips-Perron, KPSS, ERS point-optimal,
and the one- and two-break tests (Perron IO/AO, Zivot-Andrews, Lee-Strazicich).

Deterministic terms are named ``none``, ``constant`` and ``constant_trend``.
Break dates are reported as the first observation of the new regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import linalg

from . import criticalvalues as cv
from .dataframe import Frame, MonthStamp, Series
from .errors import ExcessIntegration, InsufficientData, ZeroVariance
from .linreg import LEVELS, TestResult, ols

DETERMINISTICS = {"none": "n", "constant": "c", "constant_trend": "ct"}
KINDS = ("adf", "dfgls", "pp", "kpss", "ers")
BREAK_KINDS = ("perron_io", "perron_ao", "zivot_andrews", "ls_crash", "ls_break")
ERS_CBAR = {"c": -7.0, "ct": -13.5}


@dataclass(frozen=True)
class UnitRootSpec:
    """Options shared by the battery.

    Parameters
    ----------
    deterministic : {"none", "constant", "constant_trend"}
    lags : int, optional
        Fixed augmentation order.  ``None`` selects it by ``criterion`` up to
        ``max_lags`` (default Schwert, ``floor(12 (n/100)^(1/4))``).
    criterion : {"sic", "aic", "hq"}
    bandwidth : int or "auto"
        Bartlett bandwidth for PP and KPSS; ``auto`` is the Newey-West (1994)
        plug-in.
    """

    deterministic: str = "constant"
    lags: int | None = None
    criterion: str = "sic"
    max_lags: int | None = None
    bandwidth: int | str = "auto"

    def __post_init__(self):
        if self.deterministic not in DETERMINISTICS:
            raise ValueError(f"deterministic must be one of {sorted(DETERMINISTICS)}")
        if self.lags is not None and self.lags < 0:
            raise ValueError("lags must be >= 0")
        if self.max_lags is not None and self.max_lags < 0:
            raise ValueError("max_lags must be >= 0")
        if self.criterion not in ("sic", "aic", "hq"):
            raise ValueError(f"unknown criterion {self.criterion!r}")

    @property
    def case(self) -> str:
        return DETERMINISTICS[self.deterministic]


def schwert_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _values(s) -> np.ndarray:
    x = np.asarray(s.values if isinstance(s, Series) else s, dtype=float).ravel()
    if x.size < 8:
        raise InsufficientData(f"{x.size} observations are too few for a unit-root test")
    if np.ptp(x) == 0:
        raise ZeroVariance("constant series")
    return x


def _det_columns(n: int, case: str, t0: int = 1) -> list[np.ndarray]:
    t = np.arange(t0, t0 + n, dtype=float)
    return {"n": [], "c": [np.ones(n)], "ct": [np.ones(n), t]}[case]


def _tstat(y: np.ndarray, X: np.ndarray, j: int) -> tuple[float, float, np.ndarray]:
    """t-statistic of coefficient ``j``, the coefficient, and the residuals."""
    q, r = np.linalg.qr(X)
    b = linalg.solve_triangular(r, q.T @ y)
    e = y - X @ b
    s2 = (e @ e) / (X.shape[0] - X.shape[1])
    rinv = linalg.solve_triangular(r, np.eye(r.shape[0]))
    se = math.sqrt(s2 * (rinv[j] @ rinv[j]))
    return float(b[j] / se), float(b[j]), e


@dataclass(frozen=True)
class _AdfFit:
    tstat: float
    gamma: float
    lags: int
    nobs: int
    resid: np.ndarray
    delta: np.ndarray


def _adf_design(x: np.ndarray, p: int, start: int, case: str, extra: np.ndarray | None = None):
    """Rows t = start..n-1 of ``dx_t`` on ``[det, x_{t-1}, dx_{t-1..t-p}, extra]``."""
    dx = np.diff(x, prepend=np.nan)
    rows = np.arange(start, x.size)
    m = rows.size
    cols = _det_columns(m, case, t0=start + 1)
    cols.append(x[rows - 1])
    cols += [dx[rows - j] for j in range(1, p + 1)]
    X = np.column_stack(cols)
    if extra is not None:
        X = np.column_stack([X, extra[rows]])
    return dx[rows], X, len(cols) - p - 1


def _select_lag(x: np.ndarray, case: str, max_p: int, criterion: str, extra=None) -> int:
    start = max_p + 1
    if x.size - start <= max_p + 4:
        raise InsufficientData(f"{x.size} observations for lag search up to {max_p}")
    best, best_p = math.inf, 0
    for p in range(max_p + 1):
        y, X, _ = _adf_design(x, p, start, case, extra)
        f = ols(y, X)
        v = (f.aic, f.sc, f.hq)[{"aic": 0, "sic": 1, "hq": 2}[criterion]]
        if v < best - 1e-12:
            best, best_p = v, p
    return best_p


def _adf(x: np.ndarray, case: str, lags: int | None, criterion: str, max_lags: int | None,
         extra: np.ndarray | None = None) -> _AdfFit:
    if lags is None:
        max_p = schwert_max_lag(x.size) if max_lags is None else max_lags
        max_p = min(max_p, max(0, (x.size - 10) // 3))
        lags = _select_lag(x, case, max_p, criterion, extra)
    start = lags + 1
    y, X, j = _adf_design(x, lags, start, case, extra)
    if y.size <= X.shape[1] + 1:
        raise InsufficientData(f"{y.size} observations for {X.shape[1]} regressors")
    t, g, e = _tstat(y, X, j)
    q, r = np.linalg.qr(X)
    b = linalg.solve_triangular(r, q.T @ y)
    return _AdfFit(t, g, lags, y.size, e, b[j + 1:j + 1 + lags])


def _band(family: str, case: str, n: float, k: int = 1) -> dict[float, float]:
    return cv.critical_values(cv.CriticalValueKey(family, case, k, n), LEVELS)


def adf(s, spec: UnitRootSpec = UnitRootSpec()) -> TestResult:
    """Augmented Dickey-Fuller t-test on ``gamma`` in
    ``dy_t = det + gamma y_{t-1} + sum delta_i dy_{t-i} + e_t``.
    """
    x = _values(s)
    f = _adf(x, spec.case, spec.lags, spec.criterion, spec.max_lags)
    key = cv.CriticalValueKey("df", spec.case, 1, f.nobs)
    return TestResult(
        "adf", f.tstat, f"df_tau[{spec.case}]", cv.p_value(key, f.tstat), _band("df", spec.case, f.nobs),
        lower_tail=True, extra={"lags": f.lags, "nobs": f.nobs, "gamma": f.gamma},
    )


def gls_detrend(x: np.ndarray, case: str, cbar: float | None = None) -> np.ndarray:
    """ERS local-to-unity GLS detrending."""
    if case not in ("c", "ct"):
        raise ValueError("GLS detrending needs a constant or constant and trend")
    n = x.size
    a = 1.0 + (ERS_CBAR[case] if cbar is None else cbar) / n
    Z = np.column_stack(_det_columns(n, case))
    xq = np.concatenate([[x[0]], x[1:] - a * x[:-1]])
    Zq = np.vstack([Z[:1], Z[1:] - a * Z[:-1]])
    b = np.linalg.lstsq(Zq, xq, rcond=None)[0]
    return x - Z @ b


def _require_det(spec: UnitRootSpec, kind: str) -> None:
    if spec.case == "n":
        raise ValueError(f"{kind} requires a constant or constant and trend")


def dfgls(s, spec: UnitRootSpec = UnitRootSpec()) -> TestResult:
    """DF-GLS: ADF t-test without deterministics on GLS-detrended data."""
    _require_det(spec, "dfgls")
    x = _values(s)
    yd = gls_detrend(x, spec.case)
    f = _adf(yd, "n", spec.lags, spec.criterion, spec.max_lags)
    cvs = _band("dfgls", spec.case, f.nobs)
    p = cv.p_value(cv.CriticalValueKey("df", "n", 1, f.nobs), f.tstat) if spec.case == "c" else None
    return TestResult("dfgls", f.tstat, f"dfgls[{spec.case}]", p, cvs, lower_tail=True,
                      extra={"lags": f.lags, "nobs": f.nobs})


def _autocov(u: np.ndarray, j: int) -> float:
    return float(u[j:] @ u[: u.size - j]) / u.size


def newey_west_auto_bandwidth(u: np.ndarray) -> int:
    """Newey-West (1994) plug-in bandwidth for the Bartlett kernel, truncated to an integer."""
    n = u.size
    pre = int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))
    g = [_autocov(u, j) for j in range(pre + 1)]
    s0 = g[0] + 2.0 * sum(g[1:])
    s1 = 2.0 * sum(j * g[j] for j in range(1, pre + 1))
    if s0 <= 0:
        return 0
    gamma = 1.1447 * ((s1 / s0) ** 2) ** (1.0 / 3.0)
    return min(int(gamma * n ** (1.0 / 3.0)), n - 1)


def long_run_variance(u: np.ndarray, bandwidth: int | str = "auto") -> tuple[float, int]:
    """Bartlett-kernel long-run variance of ``u`` (``n`` divisor)."""
    L = newey_west_auto_bandwidth(u) if bandwidth == "auto" else int(bandwidth)
    if L < 0 or L >= u.size:
        raise ValueError(f"bandwidth {L} outside 0..{u.size - 1}")
    lam = _autocov(u, 0) + 2.0 * sum((1.0 - j / (L + 1.0)) * _autocov(u, j) for j in range(1, L + 1))
    return lam, L


def _pp_stats(x: np.ndarray, case: str, bandwidth) -> tuple[float, float, int, int]:
    """Phillips-Perron ``Z_t`` and ``Z_alpha`` from the DF regression with no lags."""
    y, X, j = _adf_design(x, 0, 1, case)
    n, k = X.shape
    t, g, e = _tstat(y, X, j)
    s2 = float(e @ e) / (n - k)
    se = math.sqrt(s2 * _xtx_diag(X, j))
    g0 = float(e @ e) / n
    lam, L = long_run_variance(e, bandwidth)
    zt = math.sqrt(g0 / lam) * t - (lam - g0) / (2.0 * math.sqrt(lam)) * n * se / math.sqrt(s2)
    za = n * g - 0.5 * (n * se) ** 2 / s2 * (lam - g0)
    return zt, za, L, n


def _xtx_diag(X: np.ndarray, j: int) -> float:
    r = np.linalg.qr(X, mode="r")
    rinv = linalg.solve_triangular(r, np.eye(r.shape[0]))
    return float(rinv[j] @ rinv[j])


def pp(s, spec: UnitRootSpec = UnitRootSpec()) -> TestResult:
    """Phillips-Perron ``Z_t``; ``Z_alpha`` is carried in ``extra``."""
    x = _values(s)
    zt, za, L, n = _pp_stats(x, spec.case, spec.bandwidth)
    return TestResult(
        "pp", zt, f"df_tau[{spec.case}]", cv.p_value(cv.CriticalValueKey("df", spec.case, 1, n), zt),
        _band("df", spec.case, n), lower_tail=True,
        extra={"bandwidth": L, "nobs": n, "z_alpha": za,
               "z_alpha_p_value": cv.p_value(cv.CriticalValueKey("df_z", spec.case, 1, n), za)},
    )


def kpss(s, spec: UnitRootSpec = UnitRootSpec()) -> TestResult:
    """KPSS LM statistic; the null is stationarity around the deterministics."""
    _require_det(spec, "kpss")
    x = _values(s)
    n = x.size
    Z = np.column_stack(_det_columns(n, spec.case))
    e = x - Z @ np.linalg.lstsq(Z, x, rcond=None)[0]
    lam, L = long_run_variance(e, spec.bandwidth)
    eta = float(np.sum(np.cumsum(e) ** 2) / (n**2 * lam))
    key = cv.CriticalValueKey("kpss", spec.case, 1)
    return TestResult("kpss", eta, f"kpss[{spec.case}]", cv.p_value(key, eta), _band("kpss", spec.case, cv.INF),
                      extra={"bandwidth": L, "nobs": n})


def ers(s, spec: UnitRootSpec = UnitRootSpec()) -> TestResult:
    """ERS point-optimal ``P_T``; small values reject the unit root.

    The zero-frequency spectrum is the autoregressive estimate from the
    DF-GLS regression, ``s^2 / (1 - sum delta)^2``.
    """
    _require_det(spec, "ers")
    x = _values(s)
    n = x.size
    case = spec.case
    a = 1.0 + ERS_CBAR[case] / n
    Z = np.column_stack(_det_columns(n, case))

    def ssr(alpha: float) -> float:
        xq = np.concatenate([[x[0]], x[1:] - alpha * x[:-1]])
        Zq = np.vstack([Z[:1], Z[1:] - alpha * Z[:-1]])
        e = xq - Zq @ np.linalg.lstsq(Zq, xq, rcond=None)[0]
        return float(e @ e)

    f = _adf(gls_detrend(x, case), "n", spec.lags, spec.criterion, spec.max_lags)
    s2 = float(f.resid @ f.resid) / f.nobs
    f0 = s2 / (1.0 - float(np.sum(f.delta))) ** 2
    stat = (ssr(a) - a * ssr(1.0)) / f0
    return TestResult("ers", stat, f"ers[{case}]", None, _band("ers", case, n), lower_tail=True,
                      extra={"lags": f.lags, "nobs": n, "rejects_below": True, "f0": f0})


_DISPATCH = {"adf": adf, "dfgls": dfgls, "pp": pp, "kpss": kpss, "ers": ers}


def unit_root(s, kind: str, spec: UnitRootSpec = UnitRootSpec()) -> TestResult:
    if kind not in _DISPATCH:
        raise ValueError(f"unknown test {kind!r}; expected one of {KINDS}")
    return _DISPATCH[kind](s, spec)


# ---------------------------------------------------------------------------
# break tests


@dataclass(frozen=True)
class BreakResult:
    """Minimum unit-root t-statistic over a grid of break dates.

    ``break_index`` holds 0-based positions of the first post-break
    observation; ``grid`` maps each candidate to its statistic.
    """

    model: str
    statistic: float
    break_index: tuple[int, ...]
    break_dates: tuple[MonthStamp, ...] | None
    critical_values: Mapping[float, float]
    lags: int
    grid: Mapping[tuple[int, ...], float] = field(repr=False, default_factory=dict)

    @property
    def reject_at(self) -> frozenset[float]:
        return frozenset(a for a, c in self.critical_values.items() if self.statistic < c)

    def rejects(self, level: float = 0.05) -> bool:
        return level in self.reject_at

    def as_test_result(self) -> TestResult:
        return TestResult(self.model, self.statistic, self.model, None, dict(self.critical_values), lower_tail=True,
                          extra={"lags": self.lags, "break": ",".join(str(d) for d in (self.break_dates or ()))})


def _interior(n: int, trim: float) -> range:
    lo = max(2, int(math.floor(trim * n)))
    hi = min(n - 2, int(math.ceil((1.0 - trim) * n)))
    if hi - lo < 1:
        raise InsufficientData(f"no interior break dates for n={n}, trimming={trim}")
    return range(lo, hi + 1)


def _break_terms(n: int, tb: int, model: str) -> list[np.ndarray]:
    """Level and/or trend shift beginning at 0-based index ``tb``."""
    t = np.arange(n)
    du = (t >= tb).astype(float)
    dt = np.where(t >= tb, t - tb + 1.0, 0.0)
    return {"crash": [du], "trend": [dt], "both": [du, dt]}[model]


def _io_stat(x: np.ndarray, tb: int, p: int, model: str, pulse: bool) -> float:
    n = x.size
    extra = _break_terms(n, tb, model)
    if pulse:
        extra.append((np.arange(n) == tb).astype(float))
    y, X, j = _adf_design(x, p, p + 1, "ct", np.column_stack(extra))
    return _tstat(y, X, j)[0]


def _ao_stat(x: np.ndarray, tb: int, p: int) -> float:
    n = x.size
    Z = np.column_stack(_det_columns(n, "ct") + _break_terms(n, tb, "both"))
    u = x - Z @ np.linalg.lstsq(Z, x, rcond=None)[0]
    pulses = np.column_stack([(np.arange(n) == tb + j).astype(float) for j in range(p + 1)])
    y, X, j = _adf_design(u, p, p + 1, "n", pulses)
    keep = np.any(X != 0, axis=0)
    keep[j] = True
    return _tstat(y, X[:, keep], int(np.sum(keep[:j])))[0]


def _ls_stat(x: np.ndarray, breaks: Sequence[int], p: int, model: str) -> float:
    """Lee-Strazicich LM t-statistic on ``phi`` for given break positions."""
    n = x.size
    t = np.arange(n)
    dZ = [np.ones(n)]
    for tb in breaks:
        dZ.append((t == tb).astype(float))
        if model == "break":
            dZ.append((t >= tb).astype(float))
    dZ = np.column_stack(dZ)
    dx = np.diff(x)
    delta = np.linalg.lstsq(dZ[1:], dx, rcond=None)[0]
    Zlev = np.cumsum(dZ, axis=0)
    psi = x[0] - Zlev[0] @ delta
    S = x - psi - Zlev @ delta
    dS = np.diff(S, prepend=np.nan)
    rows = np.arange(p + 1, n)
    X = np.column_stack([dZ[rows], S[rows - 1]] + [dS[rows - j] for j in range(1, p + 1)])
    return _tstat(dx[rows - 1], X, dZ.shape[1])[0]


def _ls_stats_batch(x: np.ndarray, t1: int, t2s: np.ndarray, p: int, model: str) -> np.ndarray:
    """:func:`_ls_stat` for one first break and many second breaks at once.

    The first-stage fit of ``dx`` on the break dummies has a closed form: the
    pulse dummies absorb their own observations and the constant and level
    shifts equal regime means of the remaining differences.  The second stage
    solves the stacked normal equations.
    """
    n = x.size
    B = t2s.size
    t = np.arange(n)
    dx = np.diff(x)
    c = np.concatenate([[0.0], np.cumsum(dx)])  # c[k] = dx[0] + ... + dx[k-1]
    T2 = t2s[:, None]
    if model == "crash":
        mu = ((c[n - 1] - dx[t1 - 1] - dx[t2s - 1]) / (n - 3))[:, None]
        g = np.broadcast_to(mu, (B, n)).copy()
        mu1 = mu[:, 0]
    else:
        mu1 = np.full(B, (c[t1 - 1] - c[0]) / (t1 - 1))
        mu2 = (c[t2s - 1] - c[t1]) / (t2s - t1 - 1)
        mu3 = (c[n - 1] - c[t2s]) / (n - 1 - t2s)
        g = np.where(t[None, :] < t1, mu1[:, None], np.where(t[None, :] < T2, mu2[:, None], mu3[:, None]))
    g[:, t1] = dx[t1 - 1]
    g[np.arange(B), t2s] = dx[t2s - 1]
    g[:, 0] = mu1
    fitted = np.cumsum(g, axis=1)
    S = x[None, :] - (x[0] - fitted[:, :1]) - fitted
    dS = np.diff(S, axis=1, prepend=np.nan)

    rows = np.arange(p + 1, n)
    R = rows[None, :]
    det = [np.ones((B, rows.size)), np.broadcast_to((rows == t1).astype(float), (B, rows.size))]
    if model == "break":
        det.append(np.broadcast_to((rows >= t1).astype(float), (B, rows.size)))
    det.append((R == T2).astype(float))
    if model == "break":
        det.append((R >= T2).astype(float))
    m = len(det)
    X = np.stack(det + [S[:, rows - 1]] + [dS[:, rows - j] for j in range(1, p + 1)], axis=2)
    y = dx[rows - 1]
    Xt = X.transpose(0, 2, 1)
    inv = np.linalg.inv(Xt @ X)
    b = (inv @ (Xt @ y)[..., None])[..., 0]
    e = y[None, :] - (X @ b[..., None])[..., 0]
    s2 = np.einsum("bn,bn->b", e, e) / (X.shape[1] - X.shape[2])
    return b[:, m] / np.sqrt(s2 * inv[:, m, m])


def _fixed_lag(x: np.ndarray, lags: int | None, criterion: str, max_lags: int | None) -> int:
    if lags is not None:
        return lags
    return _adf(x, "ct", None, criterion, max_lags).lags


def break_unit_root(s, kind: str, trimming: float | None = None, lags: int | None = None,
                    criterion: str = "sic", max_lags: int | None = None, za_model: str = "both") -> BreakResult:
    """Minimum-t unit-root test with one or two endogenous breaks.

    The augmentation order is chosen once, on the no-break ADF regression with
    constant and trend, and held fixed across the break grid.  Ties in the
    minimum go to the earliest date.
    """
    if kind not in BREAK_KINDS:
        raise ValueError(f"unknown break test {kind!r}; expected one of {BREAK_KINDS}")
    x = _values(s)
    n = x.size
    trim = (0.10 if kind.startswith("ls") else 0.15) if trimming is None else trimming
    if n * trim < 2:
        raise InsufficientData(f"n * trimming = {n * trim:.2f} < 2")
    p = _fixed_lag(x, lags, criterion, max_lags)
    dates = range(max(p + 3, _interior(n, trim).start), _interior(n, trim).stop)
    grid: dict[tuple[int, ...], float] = {}
    if kind in ("perron_io", "zivot_andrews", "perron_ao"):
        for tb in dates:
            if kind == "perron_io":
                grid[(tb,)] = _io_stat(x, tb, p, "both", pulse=True)
            elif kind == "zivot_andrews":
                grid[(tb,)] = _io_stat(x, tb, p, za_model, pulse=False)
            else:
                grid[(tb,)] = _ao_stat(x, tb, p)
    else:
        model = "crash" if kind == "ls_crash" else "break"
        for t1 in dates:
            t2s = np.arange(max(t1 + 2, dates.start), dates.stop)
            if t2s.size:
                for t2, v in zip(t2s, _ls_stats_batch(x, t1, t2s, p, model)):
                    grid[(t1, int(t2))] = float(v)
    if not grid:
        raise InsufficientData("break grid is empty")
    best = min(grid.items(), key=lambda kv: (kv[1], kv[0]))
    idx = best[0]
    if kind == "zivot_andrews":
        cvs = _band("za", za_model, cv.INF)
    elif kind in ("perron_io", "perron_ao"):
        cvs = _band(kind, "both", cv.INF)
    elif kind == "ls_crash":
        cvs = _band("ls_crash", "", cv.INF)
    else:
        cvs = cv.ls_break_critical_values(idx[0] / n, idx[1] / n, LEVELS)
    start = s.start if isinstance(s, Series) else None
    bdates = tuple(start.shift(i) for i in idx) if start is not None else None
    return BreakResult(kind, float(best[1]), idx, bdates, cvs, p, grid)


def max_integration_order(frame: Frame, level: float = 0.05, spec: UnitRootSpec | None = None) -> int:
    """Largest order of integration across columns by sequential ADF tests.

    Levels use constant and trend; differences use a constant.
    """
    orders = []
    for s in frame:
        x = np.asarray(s.values, dtype=float)
        for d in range(4):
            sp = spec or UnitRootSpec("constant_trend" if d == 0 else "constant")
            if adf(x, sp).rejects(level):
                break
            if d == 2:
                raise ExcessIntegration(f"{s.name} is integrated of order > 2")
            x = np.diff(x)
        orders.append(d)
    return max(orders)
