"""Impulse responses, forecast-error variance decomposition and historical decomposition.

Responses are indexed ``[shock, variable, horizon]``.  Shock scales use the
degrees-of-freedom adjusted residual covariance (divisor ``T - m``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DegenerateCovariance
from .varmodel import VarFit, stability_roots

METHODS = ("cholesky", "generalized")


def _duplication(n: int) -> np.ndarray:
    """``D_n`` with ``vec(S) = D_n vech(S)`` for symmetric ``S``."""
    D = np.zeros((n * n, n * (n + 1) // 2))
    k = 0
    for j in range(n):
        for i in range(j, n):
            D[j * n + i, k] = 1.0
            D[i * n + j, k] = 1.0
            k += 1
    return D


def _elimination(n: int) -> np.ndarray:
    """``L_n`` with ``vech(S) = L_n vec(S)``."""
    L = np.zeros((n * (n + 1) // 2, n * n))
    k = 0
    for j in range(n):
        for i in range(j, n):
            L[k, j * n + i] = 1.0
            k += 1
    return L


def _commutation(n: int) -> np.ndarray:
    K = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            K[i * n + j, j * n + i] = 1.0
    return K


def _chol(sigma: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError:
        raise DegenerateCovariance("residual covariance is not positive definite") from None


def _permutation(names: Sequence[str], ordering: Sequence[str] | None) -> np.ndarray:
    if ordering is None:
        return np.arange(len(names))
    if sorted(ordering) != sorted(names):
        raise ValueError(f"ordering {list(ordering)} must be a permutation of {list(names)}")
    return np.array([list(names).index(v) for v in ordering])


def impact_matrix(sigma: np.ndarray, method: str, perm: np.ndarray | None = None) -> np.ndarray:
    """Matrix ``B`` with ``u_t = B eps_t``; column ``j`` is the impact of shock ``j``.

    For ``cholesky`` the columns follow ``perm`` (shock ``j`` belongs to
    variable ``perm[j]``); for ``generalized`` they follow the variable order.
    """
    n = sigma.shape[0]
    if method == "cholesky":
        perm = np.arange(n) if perm is None else perm
        P = _chol(sigma[np.ix_(perm, perm)])
        B = np.zeros((n, n))
        B[perm, :] = P
        return B
    if method == "generalized":
        d = np.diag(sigma)
        if np.any(d <= 0):
            raise DegenerateCovariance("nonpositive residual variance")
        _chol(sigma)
        return sigma / np.sqrt(d)[None, :]
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class IrfPaths:
    """Impulse responses with +-2 standard-error bands.

    ``responses[j, i, h]`` is the response of variable ``i`` to shock ``j`` at
    horizon ``h``.
    """

    method: str
    shocks: tuple[str, ...]
    variables: tuple[str, ...]
    responses: np.ndarray = field(repr=False)
    std_errors: np.ndarray | None = field(repr=False, default=None)
    band: str = "analytic"

    @property
    def horizon(self) -> int:
        return self.responses.shape[2] - 1

    @property
    def lower(self) -> np.ndarray:
        return self.responses - 2.0 * self.std_errors

    @property
    def upper(self) -> np.ndarray:
        return self.responses + 2.0 * self.std_errors

    def response(self, shock: str, variable: str) -> np.ndarray:
        return self.responses[self.shocks.index(shock), self.variables.index(variable)]

    def long_rows(self) -> list[tuple[str, str, int, float, float, float]]:
        out = []
        for j, s in enumerate(self.shocks):
            for i, v in enumerate(self.variables):
                for h in range(self.horizon + 1):
                    r = float(self.responses[j, i, h])
                    se = float(self.std_errors[j, i, h]) if self.std_errors is not None else math.nan
                    out.append((s, v, h, r, r - 2 * se, r + 2 * se))
        return out


def _ma_jacobians(fit: VarFit, H: int) -> list[np.ndarray]:
    """``G_h = d vec(Phi_h) / d vec(A)'`` with ``A = [A_1 .. A_p]``."""
    n, p = fit.neqs, fit.p
    C = fit.companion()
    J = np.zeros((n, n * p))
    J[:, :n] = np.eye(n)
    phi = fit.ma_coefficients(H)
    G = [np.zeros((n * n, n * n * p))]
    Cpow = [np.eye(n * p)]
    for h in range(1, H + 1):
        Cpow.append(Cpow[-1] @ C.T)
    for h in range(1, H + 1):
        g = np.zeros((n * n, n * n * p))
        for m in range(h):
            g += np.kron(J @ Cpow[h - 1 - m], phi[m])
        G.append(g)
    return G


def _lag_coef_covariance(fit: VarFit, sigma: np.ndarray) -> np.ndarray:
    """Covariance of ``vec([A_1 .. A_p])`` from the equation-wise OLS design."""
    X = fit.equations[0].X
    xtx_inv = np.linalg.inv(X.T @ X)
    ndet = sum(1 for nm in fit.regressor_names if nm in ("const", "trend"))
    idx = np.arange(ndet, ndet + fit.neqs * fit.p)
    return np.kron(xtx_inv[np.ix_(idx, idx)], sigma)


def _sigma_covariance(sigma: np.ndarray, T: int) -> np.ndarray:
    n = sigma.shape[0]
    Dp = np.linalg.pinv(_duplication(n))
    return 2.0 * Dp @ np.kron(sigma, sigma) @ Dp.T / T


def _impact_jacobian(sigma: np.ndarray, method: str, perm: np.ndarray) -> np.ndarray:
    """``d vec(B) / d vech(Sigma)'`` for the impact matrix of :func:`impact_matrix`."""
    n = sigma.shape[0]
    Dn = _duplication(n)
    if method == "cholesky":
        Sp = sigma[np.ix_(perm, perm)]
        P = _chol(Sp)
        L = _elimination(n)
        K = _commutation(n)
        Hp = L.T @ np.linalg.inv(L @ (np.eye(n * n) + K) @ np.kron(P, np.eye(n)) @ L.T)
        # vech of the permuted Sigma in terms of vech(Sigma); rows of B are permuted back.
        Pm = np.eye(n)[perm]
        vec_perm_sigma = np.kron(Pm, Pm)
        row_back = np.kron(np.eye(n), Pm.T)
        return row_back @ Hp @ L @ vec_perm_sigma @ Dn
    d = np.diag(sigma)
    S = np.diag(d**-0.5)
    dS = np.zeros((n * n, n * n))
    for j in range(n):
        dS[j * n + j, j * n + j] = -0.5 * d[j] ** -1.5
    return (np.kron(S, np.eye(n)) + np.kron(np.eye(n), sigma) @ dS) @ Dn


def _responses(phi: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum("hik,kj->jih", phi, B)


def impulse_response(fit: VarFit, H: int = 24, method: str = "cholesky", ordering: Sequence[str] | None = None,
                     bands: str = "analytic", replications: int = 1000, seed: int = 0) -> IrfPaths:
    """Orthogonalized or generalized impulse responses for horizons ``0..H``.

    ``bands="analytic"`` gives delta-method standard errors; ``"montecarlo"``
    draws ``(A, vech Sigma)`` from their asymptotic normal law with a seeded
    generator; ``"none"`` skips them.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "cholesky" and ordering is None:
        raise ValueError("cholesky identification needs an ordering")
    if not stability_roots(fit).stable:
        warnings.warn("VAR has a root on or outside the unit circle", stacklevel=2)
    n = fit.neqs
    perm = _permutation(fit.names, ordering)
    sigma = fit.sigma_dfadj
    B = impact_matrix(sigma, method, perm)
    phi = fit.ma_coefficients(H)
    resp = _responses(phi, B)
    shocks = tuple(fit.names[i] for i in perm) if method == "cholesky" else tuple(fit.names)
    se = None
    if bands == "analytic":
        se = _analytic_se(fit, H, method, perm, sigma, B, phi)
    elif bands == "montecarlo":
        se = _montecarlo_se(fit, H, method, perm, sigma, replications, seed)
    elif bands != "none":
        raise ValueError(f"unknown bands {bands!r}")
    return IrfPaths(method, shocks, tuple(fit.names), resp, se, bands)


def _analytic_se(fit, H, method, perm, sigma, B, phi) -> np.ndarray:
    n = fit.neqs
    T = fit.nobs
    cov_a = _lag_coef_covariance(fit, sigma)
    cov_s = _sigma_covariance(sigma, T)
    G = _ma_jacobians(fit, H)
    dB = _impact_jacobian(sigma, method, perm)
    se = np.zeros((n, n, H + 1))
    for h in range(H + 1):
        Ca = np.kron(B.T, np.eye(n)) @ G[h]
        Cs = np.kron(np.eye(n), phi[h]) @ dB
        V = Ca @ cov_a @ Ca.T + Cs @ cov_s @ Cs.T
        # vec is column-major: entry (i, j) of Theta_h sits at j * n + i
        se[:, :, h] = np.sqrt(np.maximum(np.diag(V), 0.0)).reshape(n, n)
    return se


def _montecarlo_se(fit, H, method, perm, sigma, replications, seed) -> np.ndarray:
    n, p = fit.neqs, fit.p
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0])))
    cov_a = _lag_coef_covariance(fit, sigma)
    cov_s = _sigma_covariance(sigma, fit.nobs)
    A = np.hstack(list(fit.coefs))
    vech_idx = np.array([(i, j) for j in range(n) for i in range(j, n)])
    la = linalg.cholesky(cov_a + 1e-300 * np.eye(cov_a.shape[0]), lower=True)
    ls = linalg.cholesky(cov_s, lower=True)
    draws = np.zeros((replications, n, n, H + 1))
    for r in range(replications):
        va = A.reshape(-1, order="F") + la @ rng.standard_normal(la.shape[0])
        Ad = va.reshape(n, n * p, order="F")
        vs = ls @ rng.standard_normal(ls.shape[0])
        Sd = sigma.copy()
        for (i, j), v in zip(vech_idx, vs):
            Sd[i, j] += v
            if i != j:
                Sd[j, i] += v
        coefs = np.stack([Ad[:, l * n:(l + 1) * n] for l in range(p)])
        phi = np.zeros((H + 1, n, n))
        phi[0] = np.eye(n)
        for h in range(1, H + 1):
            for i in range(1, min(h, p) + 1):
                phi[h] += phi[h - i] @ coefs[i - 1]
        try:
            draws[r] = _responses(phi, impact_matrix(Sd, method, perm))
        except DegenerateCovariance:
            draws[r] = np.nan
    return np.nanstd(draws, axis=0, ddof=1)


@dataclass(frozen=True)
class FevdTable:
    """``shares[i, h-1, j]``: fraction of variable ``i``'s ``h``-step forecast-error variance due to shock ``j``."""

    variables: tuple[str, ...]
    shocks: tuple[str, ...]
    shares: np.ndarray = field(repr=False)

    def share(self, variable: str, shock: str, h: int) -> float:
        return float(self.shares[self.variables.index(variable), h - 1, self.shocks.index(shock)])

    def long_rows(self) -> list[tuple[str, str, int, float]]:
        return [(v, s, h + 1, float(self.shares[i, h, j]))
                for i, v in enumerate(self.variables) for h in range(self.shares.shape[1])
                for j, s in enumerate(self.shocks)]


def fevd(fit: VarFit, H: int = 24, ordering: Sequence[str] | None = None) -> FevdTable:
    """Cholesky forecast-error variance decomposition for horizons ``1..H``."""
    perm = _permutation(fit.names, ordering)
    irf = impulse_response(fit, H - 1, "cholesky", [fit.names[i] for i in perm], bands="none")
    theta2 = irf.responses**2
    cum = np.cumsum(theta2, axis=2)
    total = cum.sum(axis=0)
    shares = np.transpose(cum / total[None, :, :], (1, 2, 0))
    return FevdTable(tuple(fit.names), irf.shocks, shares)


@dataclass(frozen=True)
class HDTable:
    """In-sample decomposition ``observed = baseline + sum_j contributions[:, j]``.

    Arrays are indexed ``[variable, shock, t]`` over the estimation sample.
    """

    variables: tuple[str, ...]
    shocks: tuple[str, ...]
    method: str
    observed: np.ndarray = field(repr=False)
    baseline: np.ndarray = field(repr=False)
    contributions: np.ndarray = field(repr=False)
    shocks_series: np.ndarray = field(repr=False)
    first_row: int = 0
    closure_error: float = 0.0

    def reconstruct(self) -> np.ndarray:
        return self.baseline + self.contributions.sum(axis=1)


def historical_decomposition(fit: VarFit, method: str = "generalized",
                             ordering: Sequence[str] | None = None) -> HDTable:
    """Split each series into a deterministic baseline and per-shock contributions.

    The baseline iterates the fitted VAR from the pre-sample observations with
    every shock set to zero; deterministic and extra-lag exogenous terms keep
    their observed values.  With ``B`` the impact matrix, structural shocks are
    ``eps_t = B^{-1} u_t`` and shock ``j`` contributes
    ``sum_s (Phi_s B)[i, j] eps_{j, t-s}``.  For ``generalized`` weights
    ``B = Sigma D^{-1/2}``, which is invertible, so the decomposition is exact;
    any rounding remainder is assigned to the last shock.
    """
    if method == "cholesky" and ordering is None:
        raise ValueError("cholesky identification needs an ordering")
    perm = _permutation(fit.names, ordering)
    n, p, T = fit.neqs, fit.p, fit.nobs
    B = impact_matrix(fit.sigma_dfadj, method, perm)
    U = fit.residuals
    eps = linalg.solve(B, U.T).T
    Y = fit.data
    t0 = fit.first_row
    exog_part = fit.exog @ fit.exog_coefs.T
    base = Y.copy()
    for t in range(t0, t0 + T):
        v = exog_part[t - t0].copy()
        for i in range(p):
            v += fit.coefs[i] @ base[t - 1 - i]
        base[t] = v
    phi = fit.ma_coefficients(T - 1)
    theta = np.einsum("hik,kj->hij", phi, B)
    contrib = np.zeros((n, n, T))
    for t in range(T):
        # sum_{s=0..t} theta_s eps_{t-s}, split by shock
        contrib[:, :, t] = np.einsum("sij,sj->ij", theta[: t + 1], eps[t::-1])
    observed = Y[t0:t0 + T].T
    baseline = base[t0:t0 + T].T
    gap = observed - baseline - contrib.sum(axis=1)
    contrib[:, -1, :] += gap
    shocks = tuple(fit.names[i] for i in perm) if method == "cholesky" else tuple(fit.names)
    return HDTable(tuple(fit.names), shocks, method, observed, baseline, contrib, eps, t0,
                   float(np.max(np.abs(gap))) if gap.size else 0.0)
