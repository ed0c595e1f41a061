"""Null distributions of the nonstandard statistics used by the toolkit.

Three plain-text tables ship in ``tsecon/data``:

``critical_values.csv``
    one record per (family, case, k, n, level[, bound]) with provenance;
``quantile_grids.csv``
    simulated CDF grids used for p-values where no published response surface
    exists (KPSS, Johansen);
``mackinnon.csv``
    coefficients of MacKinnon's tau and normalized-bias response surfaces.

``level`` is always the rejection probability.  For lower-tail statistics
(ADF-type, ERS, break tests) the test rejects below the critical value.
"""

from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

import numpy as np
from scipy import special, stats
from scipy.interpolate import LinearNDInterpolator

from .errors import MissingCriticalValues, UnsupportedFamily, UnsupportedPValue

FORMAT_VERSION = "1"
INF = math.inf

LOWER_TAIL = {
    "df", "coint_df", "df_z", "coint_z", "dfgls", "ers", "za", "perron_io", "perron_ao",
    "ls_crash", "ls_break", "gh_t", "gh_za", "bounds_t",
}
UPPER_TAIL = {"kpss", "johansen_trace", "johansen_maxeig", "bounds_f", "cusumq"}
FAMILIES = LOWER_TAIL | UPPER_TAIL
P_VALUE_FAMILIES = {"df", "coint_df", "df_z", "coint_z", "kpss", "johansen_trace", "johansen_maxeig"}

GRID_PROBS = (
    0.001, 0.0025, 0.005, 0.01, 0.025, 0.05, 0.075, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5,
    0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.925, 0.95, 0.975, 0.99, 0.995, 0.9975, 0.999,
)


@dataclass(frozen=True)
class CriticalValueKey:
    family: str
    case: str = ""
    k: int = 1
    n: float = INF

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise MissingCriticalValues(f"unknown family {self.family!r}")


@dataclass(frozen=True)
class Record:
    family: str
    case: str
    k: int
    n: float
    level: float
    bound: str
    value: float
    source: str


def _fmt_n(n: float) -> str:
    return "inf" if n == INF else str(int(n))


def _read_text(name: str) -> str:
    return resources.files("tsecon").joinpath("data", name).read_text()


def _rows(text: str) -> list[list[str]]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    next(reader)
    return [row for row in reader]


def parse_records(text: str) -> list[Record]:
    return [
        Record(f, c, int(k), float(n), float(lv), b, float(v), s)
        for f, c, k, n, lv, b, v, s in _rows(text)
    ]


def format_records(records: Iterable[Record], comment: str = "") -> str:
    out = io.StringIO()
    out.write(f"# format-version: {FORMAT_VERSION}\n")
    for line in comment.splitlines():
        out.write(f"# {line}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["family", "case", "k", "n", "level", "bound", "value", "source"])
    for r in records:
        w.writerow([r.family, r.case, r.k, _fmt_n(r.n), repr(r.level), r.bound, repr(r.value), r.source])
    return out.getvalue()


@functools.lru_cache(maxsize=None)
def _records() -> dict[tuple, list[Record]]:
    table: dict[tuple, list[Record]] = {}
    for r in parse_records(_read_text("critical_values.csv")):
        table.setdefault((r.family, r.case, r.k), []).append(r)
    return table


@functools.lru_cache(maxsize=None)
def _grids() -> dict[tuple, tuple[np.ndarray, np.ndarray, str]]:
    raw: dict[tuple, list[tuple[float, float]]] = {}
    src: dict[tuple, str] = {}
    for f, c, k, n, prob, v, s in _rows(_read_text("quantile_grids.csv")):
        key = (f, c, int(k))
        raw.setdefault(key, []).append((float(prob), float(v)))
        src[key] = s
    out = {}
    for key, pts in raw.items():
        pts.sort()
        probs = np.array([p for p, _ in pts])
        vals = np.maximum.accumulate(np.array([v for _, v in pts]))
        out[key] = (probs, vals, src[key])
    return out


@functools.lru_cache(maxsize=None)
def _mackinnon() -> dict[tuple, np.ndarray]:
    coef: dict[tuple, list[tuple[int, float]]] = {}
    for kind, reg, N, idx, v in _rows(_read_text("mackinnon.csv")):
        coef.setdefault((kind, reg, int(N)), []).append((int(idx), float(v)))
    return {k: np.array([v for _, v in sorted(pts)]) for k, pts in coef.items()}


def _mk(kind: str, reg: str, N: int) -> np.ndarray:
    try:
        return _mackinnon()[(kind, reg, N)]
    except KeyError:
        raise MissingCriticalValues(f"no MacKinnon {kind} surface for regression={reg!r}, N={N}") from None


def _mackinnon_tau_p(stat: float, reg: str, N: int) -> float:
    tmin = _mk("tau_min", reg, N)[0]
    tmax = _mk("tau_max", reg, N)[0]
    if stat > tmax:
        return 1.0
    if stat < tmin:
        return 0.0
    kind = "tau_smallp" if stat <= _mk("tau_star", reg, N)[0] else "tau_largep"
    c = _mk(kind, reg, N)
    return float(stats.norm.cdf(np.polynomial.polynomial.polyval(stat, c)))


def _mackinnon_z_p(stat: float, reg: str, N: int) -> float:
    if stat <= _mk("z_star", reg, N)[0]:
        c = _mk("z_smallp", reg, N)
        return float(stats.norm.cdf(np.polynomial.polynomial.polyval(math.log(-stat), c)))
    c = _mk("z_largep", reg, N)
    return float(stats.norm.cdf(np.polynomial.polynomial.polyval(stat, c)))


def _grid_p(key: CriticalValueKey, stat: float) -> float:
    try:
        probs, vals, _ = _grids()[(key.family, key.case, key.k)]
    except KeyError:
        raise MissingCriticalValues(f"no simulated distribution for {key}") from None
    logit = np.log(probs / (1 - probs))
    if stat <= vals[0]:
        slope = (logit[1] - logit[0]) / max(vals[1] - vals[0], 1e-12)
        lg = logit[0] + slope * (stat - vals[0])
    elif stat >= vals[-1]:
        slope = (logit[-1] - logit[-2]) / max(vals[-1] - vals[-2], 1e-12)
        lg = logit[-1] + slope * (stat - vals[-1])
    else:
        lg = float(np.interp(stat, vals, logit))
    # each tail is evaluated directly so tiny p-values keep their precision
    if key.family in LOWER_TAIL:
        return float(special.expit(lg))
    return float(special.expit(-lg))


def p_value(key: CriticalValueKey, statistic: float) -> float:
    """Approximate p-value of ``statistic`` under the family's null."""
    f = key.family
    if f not in P_VALUE_FAMILIES:
        raise UnsupportedPValue(f"{f} provides critical values only")
    if f in ("df", "coint_df"):
        return _mackinnon_tau_p(statistic, key.case, key.k)
    if f in ("df_z", "coint_z"):
        return _mackinnon_z_p(statistic, key.case, key.k)
    return _grid_p(key, statistic)


def _interp_over_n(recs: list[Record], n: float) -> float:
    """Linear interpolation in 1/n across tabulated sample sizes."""
    pts = sorted({(1.0 / r.n if r.n != INF else 0.0): r.value for r in recs}.items())
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if len(xs) == 1:
        return float(ys[0])
    x = 0.0 if n == INF else 1.0 / n
    return float(np.interp(x, xs, ys))


def _mackinnon_cv(reg: str, N: int, level: float, n: float) -> float:
    key = ("tau2010_" + repr(level), reg, N)
    if key in _mackinnon():
        c = _mackinnon()[key]
        x = 0.0 if n == INF else 1.0 / n
        return float(np.polynomial.polynomial.polyval(x, c))
    from scipy.optimize import brentq

    return float(brentq(lambda t: _mackinnon_tau_p(t, reg, N) - level, -15.0, 2.0, xtol=1e-10))


def critical_values(key: CriticalValueKey, levels=(0.01, 0.05, 0.10), bound: str = "") -> dict[float, float]:
    """Critical values by rejection probability, interpolated in the sample size."""
    f = key.family
    if f in ("df", "coint_df"):
        return {lv: _mackinnon_cv(key.case, key.k, lv, key.n) for lv in levels}
    if f == "dfgls" and key.case == "c":
        return critical_values(CriticalValueKey("df", "n", 1, key.n), levels)
    if f == "ls_break":
        raise MissingCriticalValues("use ls_break_critical_values(l1, l2) for the trend-break LM test")
    recs = _records().get((f, key.case, key.k), [])
    out = {}
    for lv in levels:
        sel = [r for r in recs if abs(r.level - lv) < 1e-12 and r.bound == bound]
        if not sel:
            if f in P_VALUE_FAMILIES and (f, key.case, key.k) in _grids():
                probs, vals, _ = _grids()[(f, key.case, key.k)]
                target = lv if f in LOWER_TAIL else 1 - lv
                out[lv] = float(np.interp(target, probs, vals))
                continue
            raise MissingCriticalValues(f"no {lv:.0%} critical value for {key}")
        out[lv] = _interp_over_n(sel, key.n)
    return out


def provenance(key: CriticalValueKey) -> str:
    f = key.family
    if f in ("df", "coint_df", "df_z", "coint_z"):
        return "MacKinnon (1994) response surfaces; MacKinnon (2010) critical values"
    srcs = sorted({r.source for r in _records().get((f, key.case, key.k), [])})
    if (f, key.case, key.k) in _grids():
        srcs.append(_grids()[(f, key.case, key.k)][2])
    if not srcs:
        raise MissingCriticalValues(f"no table for {key}")
    return "; ".join(srcs)


_LS_POINTS = None


def ls_break_critical_values(l1: float, l2: float, levels=(0.01, 0.05, 0.10)) -> dict[float, float]:
    """Two-break LM (trend-break model) critical values at break fractions ``l1 < l2``.

    The published grid covers fractions 0.2..0.8; values in between are linearly
    interpolated on the triangulated grid and points outside it are clamped.
    """
    recs = [r for (f, _, _), rs in _records().items() if f == "ls_break" for r in rs]
    if not recs:
        raise MissingCriticalValues("no ls_break table")
    l1, l2 = sorted((float(l1), float(l2)))
    l1 = min(max(l1, 0.2), 0.6)
    l2 = min(max(l2, l1 + 0.2), 0.8)
    out = {}
    for lv in levels:
        sel = [r for r in recs if abs(r.level - lv) < 1e-12]
        if not sel:
            raise MissingCriticalValues(f"no {lv:.0%} ls_break value")
        pts = np.array([[float(x) for x in r.case.split("-")] for r in sel])
        vals = np.array([r.value for r in sel])
        v = LinearNDInterpolator(pts, vals)(l1, l2)
        if np.isnan(v):
            v = vals[np.argmin(np.hypot(pts[:, 0] - l1, pts[:, 1] - l2))]
        out[lv] = float(v)
    return out


@dataclass(frozen=True)
class BoundsBand:
    case: str
    k: int
    n: float
    level: float
    f: tuple[float, float]
    t: tuple[float, float] | None
    source: str


BOUNDS_CASES = ("I", "II", "III", "IV", "V")
NARAYAN_RANGE = (30, 80)


def bounds(case: str, k: int, n: float = INF, level: float = 0.05, source: str | None = None) -> BoundsBand:
    """I(0)/I(1) critical bands of the bounds F and t statistics.

    ``source`` is ``"narayan_small_sample"`` (only for 30 <= n <= 80) or
    ``"pesaran_asymptotic"``; by default the small-sample table is used inside
    its range.
    """
    if case not in BOUNDS_CASES:
        raise MissingCriticalValues(f"unknown bounds case {case!r}")
    lo, hi = NARAYAN_RANGE
    if source is None:
        source = "narayan_small_sample" if n != INF and lo <= n <= hi else "pesaran_asymptotic"
    if source == "narayan_small_sample" and not (n != INF and lo <= n <= hi):
        raise MissingCriticalValues(f"small-sample bounds tabulated for {lo} <= n <= {hi} only")
    if source not in ("narayan_small_sample", "pesaran_asymptotic"):
        raise ValueError(f"unknown bounds source {source!r}")

    def band(family: str) -> tuple[float, float] | None:
        recs = _records().get((family, case, k), [])
        if source == "pesaran_asymptotic":
            recs = [r for r in recs if r.n == INF]
            nn = INF
        else:
            recs = [r for r in recs if r.n != INF]
            nn = n
        recs = [r for r in recs if abs(r.level - level) < 1e-12]
        if not recs:
            return None
        # published records take precedence over simulated ones at the same key
        pub = [r for r in recs if not r.source.startswith("simulated")]
        if pub:
            recs = pub
        i0 = [r for r in recs if r.bound == "I0"]
        i1 = [r for r in recs if r.bound == "I1"]
        return (_interp_over_n(i0, nn), _interp_over_n(i1, nn))

    f = band("bounds_f")
    if f is None:
        raise MissingCriticalValues(f"no bounds F table for case {case}, k={k}, level={level}, {source}")
    t = band("bounds_t")
    srcs = sorted({r.source for fam in ("bounds_f", "bounds_t") for r in _records().get((fam, case, k), [])
                   if (r.n == INF) == (source == "pesaran_asymptotic")})
    return BoundsBand(case, k, n, level, f, t, "; ".join(srcs))


def cusumq_c0(m: int, level: float = 0.05) -> float:
    """Half-width of the CUSUM-of-squares band for ``m`` recursive residuals."""
    recs = [r for r in _records().get(("cusumq", "", 1), []) if abs(r.level - level) < 1e-12]
    if not recs:
        raise MissingCriticalValues(f"no cusumq table at level {level}")
    ms = np.array([r.n for r in recs])
    vs = np.array([r.value for r in recs])
    order = np.argsort(ms)
    ms, vs = ms[order], vs[order]
    if m >= ms[-1]:
        return float(vs[-1] * math.sqrt(ms[-1] / m))
    return float(np.interp(m, ms, vs))


# ---------------------------------------------------------------------------
# Monte Carlo regeneration harness


def _rng(seed: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), int(chunk)])
    return np.random.Generator(np.random.Philox(ss))


def _det(n: int, case: str) -> np.ndarray:
    t = np.arange(1, n + 1, dtype=float)
    cols = {"n": [], "c": [np.ones(n)], "ct": [np.ones(n), t]}[case]
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def _batch_resid(Y: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Residuals of each column block of Y (R x n x m) on a common D (n x d)."""
    if D.shape[1] == 0:
        return Y
    q, _ = np.linalg.qr(D)
    return Y - np.einsum("ij,rjm->rim", q, np.einsum("ji,rjm->rim", q, Y))


def _batch_ols(y: np.ndarray, X: np.ndarray):
    """Coefficients, residual variance and (X'X)^-1 for a batch y (R x n), X (R x n x k)."""
    xtx = np.einsum("rni,rnj->rij", X, X)
    xty = np.einsum("rni,rn->ri", X, y)
    inv = np.linalg.inv(xtx)
    b = np.einsum("rij,rj->ri", inv, xty)
    e = y - np.einsum("rnk,rk->rn", X, b)
    s2 = np.einsum("rn,rn->r", e, e) / (y.shape[1] - X.shape[2])
    return b, s2, inv, e


def _sim_df(rng, reps, n, case):
    e = rng.standard_normal((reps, n + 1))
    y = np.cumsum(e, axis=1)
    dy = np.diff(y, axis=1)
    D = _det(n, case)
    # partial the deterministics out of both sides, then the t-ratio needs only dot products
    r = _batch_resid(np.stack([dy, y[:, :-1]], axis=2), D)
    r0, r1 = r[:, :, 0], r[:, :, 1]
    s01 = np.einsum("rn,rn->r", r0, r1)
    s11 = np.einsum("rn,rn->r", r1, r1)
    s2 = (np.einsum("rn,rn->r", r0, r0) - s01**2 / s11) / (n - D.shape[1] - 1)
    return s01 / np.sqrt(s2 * s11)


def _sim_kpss(rng, reps, n, case):
    y = rng.standard_normal((reps, n, 1))
    e = _batch_resid(y, _det(n, case))[:, :, 0]
    s = np.cumsum(e, axis=1)
    return np.sum(s**2, axis=1) / (n**2 * np.mean(e**2, axis=1))


_JOH_CASES = {
    # (unrestricted deterministics, restricted deterministics appended to y_{t-1})
    "1": ([], []),
    "2": ([], ["c"]),
    "3": (["c"], []),
    "4": (["c"], ["t"]),
    "5": (["c", "t"], []),
}


def johansen_deterministics(case: str, n: int, t0: int = 1):
    t = np.arange(t0, t0 + n, dtype=float)
    cols = {"c": np.ones(n), "t": t}
    unres, res = _JOH_CASES[case]
    U = np.column_stack([cols[c] for c in unres]) if unres else np.zeros((n, 0))
    Rr = np.column_stack([cols[c] for c in res]) if res else np.zeros((n, 0))
    return U, Rr


def _sim_johansen(rng, reps, n, case, m):
    e = rng.standard_normal((reps, n + 1, m))
    y = np.cumsum(e, axis=1)
    dy = np.diff(y, axis=1)
    ylag = y[:, :-1, :]
    if case in ("3", "5"):
        # these cases presume trending levels, so one stochastic direction is
        # dominated by a linear (case 3) or quadratic (case 5) trend
        tau = np.arange(n, dtype=float) / n
        ylag = ylag.copy()
        ylag[:, :, -1] = tau if case == "3" else tau**2
    U, Rr = johansen_deterministics(case, n)
    if Rr.shape[1]:
        ylag = np.concatenate([ylag, np.broadcast_to(Rr, (reps, *Rr.shape))], axis=2)
    r0 = _batch_resid(dy, U)
    r1 = _batch_resid(ylag, U)
    s00 = np.einsum("rti,rtj->rij", r0, r0) / n
    s01 = np.einsum("rti,rtj->rij", r0, r1) / n
    s11 = np.einsum("rti,rtj->rij", r1, r1) / n
    l11 = np.linalg.cholesky(s11)
    li = np.linalg.inv(l11)
    a = np.einsum("rij,rjk->rik", np.swapaxes(s01, 1, 2), np.linalg.solve(s00, s01))
    mmat = np.einsum("rij,rjk,rlk->ril", li, a, li)
    lam = np.sort(np.clip(np.linalg.eigvalsh(mmat), 0, 1 - 1e-15), axis=1)[:, ::-1][:, :m]
    trace = -n * np.sum(np.log1p(-lam), axis=1)
    maxeig = -n * np.log1p(-lam[:, 0])
    return trace, maxeig


_BOUNDS_DET = {
    # unrestricted, restricted (tested jointly with the lagged levels)
    "I": ([], []),
    "II": ([], ["c"]),
    "III": (["c"], []),
    "IV": (["c"], ["t"]),
    "V": (["c", "t"], []),
}


def _sim_bounds(rng, reps, n, case, k, integrated):
    """F and t statistics of the conditional ECM under no level relationship."""
    e = rng.standard_normal((reps, n + 1, k + 1))
    y = np.cumsum(e[:, :, 0], axis=1)
    x = np.cumsum(e[:, :, 1:], axis=1) if integrated else e[:, :, 1:]
    dy = np.diff(y, axis=1)
    lev = np.concatenate([y[:, :-1, None], x[:, :-1, :]], axis=2)
    t = np.arange(1, n + 1, dtype=float)
    cols = {"c": np.ones(n), "t": t}
    unres, res = _BOUNDS_DET[case]
    parts = [lev]
    if res:
        parts.append(np.broadcast_to(np.column_stack([cols[c] for c in res]), (reps, n, len(res))))
    tested = np.concatenate(parts, axis=2)
    U = np.column_stack([cols[c] for c in unres]) if unres else np.zeros((n, 0))
    q = tested.shape[2]
    dyr = _batch_resid(dy[:, :, None], U)[:, :, 0]
    Xr = _batch_resid(tested, U)
    b, s2, inv, _ = _batch_ols(dyr, Xr)
    df = n - U.shape[1] - q
    s2 = s2 * (n - q) / df
    quad = np.einsum("ri,rij,rj->r", b, np.linalg.inv(inv), b)
    F = quad / q / s2
    tstat = b[:, 0] / np.sqrt(s2 * inv[:, 0, 0])
    return F, tstat


def _sim_cusumq(rng, reps, m):
    w2 = rng.standard_normal((reps, m)) ** 2
    s = np.cumsum(w2, axis=1) / np.sum(w2, axis=1, keepdims=True)
    line = np.arange(1, m + 1) / m
    return np.max(np.abs(s - line), axis=1)


SIMULATORS = ("df", "kpss", "johansen_trace", "johansen_maxeig", "bounds_f", "bounds_t", "cusumq")


def chunked_draws(fn, replications: int, seed: int, *args, chunk: int = 5000) -> tuple[np.ndarray, ...]:
    """Run ``fn(rng, reps, *args)`` in fixed-size chunks with per-chunk Philox streams.

    The output depends only on ``seed`` and ``chunk``, never on scheduling.
    """
    parts = []
    done = c = 0
    while done < replications:
        r = min(chunk, replications - done)
        out = fn(_rng(seed, c), r, *args)
        parts.append(out if isinstance(out, tuple) else (out,))
        done += r
        c += 1
    return tuple(np.concatenate(p) for p in zip(*parts))


def simulate_statistics(family: str, params: Mapping, replications: int, seed: int) -> np.ndarray:
    """Draws of a family's statistic under its null, deterministic given ``seed``."""
    if family not in SIMULATORS:
        raise UnsupportedFamily(f"no simulator for {family!r}")
    n = int(params.get("n", 500))
    if family == "df":
        return chunked_draws(_sim_df, replications, seed, n, params.get("case", "c"))[0]
    if family == "kpss":
        return chunked_draws(_sim_kpss, replications, seed, n, params.get("case", "c"))[0]
    if family.startswith("johansen"):
        tr, me = chunked_draws(_sim_johansen, replications, seed, n, str(params.get("case", "3")),
                               int(params.get("k", 1)))
        return tr if family == "johansen_trace" else me
    if family.startswith("bounds"):
        F, t = chunked_draws(_sim_bounds, replications, seed, n, params.get("case", "III"),
                             int(params.get("k", 1)), bool(params.get("integrated", True)))
        return F if family == "bounds_f" else t
    return chunked_draws(_sim_cusumq, replications, seed, int(params["m"]))[0]


def simulate_table(family: str, params: Mapping, replications: int, seed: int,
                   levels=(0.01, 0.05, 0.10)) -> dict[float, float]:
    """Monte Carlo critical values at the given rejection probabilities.

    For ``cusumq`` the statistic is the two-sided maximum distance from the
    expectation line, so the returned value is the band half-width.
    """
    if replications < 10_000:
        raise ValueError("at least 10^4 replications are required")
    draws = simulate_statistics(family, params, replications, seed)
    if family in LOWER_TAIL:
        return {lv: float(np.quantile(draws, lv)) for lv in levels}
    return {lv: float(np.quantile(draws, 1 - lv)) for lv in levels}
