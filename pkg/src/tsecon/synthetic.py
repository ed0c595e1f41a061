"""Seeded synthetic monthly price pairs with a built-in long-run relation.

Used by the tests and demos when no real dataset is at hand.  The log of the
first price is a driftless random walk with fat-tailed shocks; the log of the
second error-corrects slowly towards ``beta`` times the first.
"""

from __future__ import annotations

import numpy as np

from .dataframe import Frame, MonthStamp, Series


def commodity_pair(n: int = 322, seed: int = 0, beta: float = 0.33, adjustment: float = 0.06,
                   start: MonthStamp = MonthStamp(1992, 1), names: tuple[str, str] = ("dubai", "gasus")) -> Frame:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 7])))
    e1 = 0.08 * rng.standard_t(5, n) / np.sqrt(5 / 3)
    e2 = 0.12 * rng.standard_normal(n)
    x = np.empty(n)
    y = np.empty(n)
    x[0], y[0] = np.log(18.0), np.log(1.6)
    mu = y[0] - beta * x[0]
    for t in range(1, n):
        x[t] = x[t - 1] + e1[t]
        gap = y[t - 1] - mu - beta * x[t - 1]
        y[t] = y[t - 1] - adjustment * gap + 0.25 * e1[t] + e2[t]
    return Frame([Series(names[0], start, np.exp(x)), Series(names[1], start, np.exp(y))])
