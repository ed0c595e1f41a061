"""Brute-force reference computations written independently of the package.

Each routine favours the textbook formula over speed: explicit loops, normal
equations and direct sums.
"""

from __future__ import annotations

import math

import numpy as np


def ols_normal_equations(y, X):
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    xtx = X.T @ X
    beta = np.linalg.solve(xtx, X.T @ y)
    e = y - X @ beta
    n, k = X.shape
    s2 = e @ e / (n - k)
    return beta, e, s2 * np.linalg.inv(xtx)


def newey_west_loop(X, e, L, df_adjust=True):
    n, k = X.shape
    S = np.zeros((k, k))
    for t in range(n):
        S += e[t] ** 2 * np.outer(X[t], X[t])
    for j in range(1, L + 1):
        w = 1 - j / (L + 1)
        for t in range(j, n):
            G = e[t] * e[t - j] * np.outer(X[t], X[t - j])
            S += w * (G + G.T)
    B = np.linalg.inv(X.T @ X)
    V = B @ S @ B
    return V * n / (n - k) if df_adjust else V


def ljung_box_sum(x, h):
    x = np.asarray(x, float)
    n = x.size
    d = x - x.mean()
    c0 = np.sum(d * d)
    q = 0.0
    for k in range(1, h + 1):
        rk = np.sum(d[k:] * d[:-k]) / c0
        q += rk * rk / (n - k)
    return n * (n + 2) * q


def jarque_bera(x):
    x = np.asarray(x, float)
    n = x.size
    d = x - x.mean()
    m2 = np.mean(d**2)
    s = np.mean(d**3) / m2**1.5
    k = np.mean(d**4) / m2**2
    return n / 6 * (s**2 + (k - 3) ** 2 / 4)


def recursive_residuals_loop(y, X):
    n, k = X.shape
    w = []
    for t in range(k, n):
        Xt, yt = X[:t], y[:t]
        b = np.linalg.lstsq(Xt, yt, rcond=None)[0]
        xt = X[t]
        f = 1 + xt @ np.linalg.inv(Xt.T @ Xt) @ xt
        w.append((y[t] - xt @ b) / math.sqrt(f))
    return np.array(w)


def var_ols(Y, p, trend=False, const=True):
    """Per-equation OLS of a VAR(p); returns (B, U, sigma_ml) with B rows = regressors."""
    T, n = Y.shape
    rows = []
    for t in range(p, T):
        r = []
        if const:
            r.append(1.0)
        if trend:
            r.append(t + 1.0)
        for l in range(1, p + 1):
            r.extend(Y[t - l])
        rows.append(r)
    Z = np.array(rows)
    B = np.linalg.lstsq(Z, Y[p:], rcond=None)[0]
    U = Y[p:] - Z @ B
    return B, U, U.T @ U / U.shape[0], Z


def ma_matrices(A, H):
    """Phi_0..Phi_H from VAR coefficient matrices ``A[l]`` (n x n) by the recursion."""
    n = A[0].shape[0]
    phi = [np.eye(n)]
    for h in range(1, H + 1):
        m = np.zeros((n, n))
        for l in range(1, min(h, len(A)) + 1):
            m += phi[h - l] @ A[l - 1]
        phi.append(m)
    return phi


def johansen_eigen(Y, p, const_unrestricted=False):
    """Eigenvalues of the reduced-rank problem for a VAR(p) in levels."""
    dY = np.diff(Y, axis=0)
    T = dY.shape[0] - (p - 1)
    Z0 = dY[p - 1:]
    Z1 = Y[p - 1:-1]
    cols = [dY[p - 1 - j:dY.shape[0] - j] for j in range(1, p)]
    if const_unrestricted:
        cols.append(np.ones((T, 1)))
    if cols:
        Z2 = np.column_stack(cols)
        M = np.eye(T) - Z2 @ np.linalg.pinv(Z2)
        R0, R1 = M @ Z0, M @ Z1
    else:
        R0, R1 = Z0, Z1
    S00 = R0.T @ R0 / T
    S11 = R1.T @ R1 / T
    S01 = R0.T @ R1 / T
    mat = np.linalg.solve(S11, S01.T @ np.linalg.solve(S00, S01))
    return np.sort(np.linalg.eigvals(mat).real)[::-1]
