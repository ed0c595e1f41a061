"""Long-run pass-through between two synthetic commodity prices with an ARDL model.

Run with ``python3 demos/ardl_walkthrough.py``.  The pair is generated so the
log of the second price error-corrects towards 0.33 times the log of the first.
"""

import numpy as np

from tsecon.ardl import bounds_test, fit_ardl, short_run_causality
from tsecon.dataframe import Series
from tsecon.errors import NoLaggedRegressors
from tsecon.synthetic import commodity_pair

pair = commodity_pair(322, seed=4)
crude, gas = (Series("ln" + s.name, s.start, np.log(s.values)) for s in pair)

fit = fit_ardl(gas, crude, max_p=6, max_q=6, criterion="aic", case="unrestricted_const")
print(f"selected {fit.spec.label} on {fit.levels_fit.n} observations")

lr = fit.long_run()
print(f"long-run multiplier {lr.coef('lndubai'):.3f} (se {lr.std_errors[0]:.3f}); the generator uses 0.33")
print(f"adjustment per month {fit.ec_coefficient:.4f}")

ecm = fit.ecm()
for name, b, t in zip(ecm.names, ecm.coefficients, ecm.tvalues):
    print(f"  {name:>16s} {b:9.4f}  t={t:6.2f}")

bt = bounds_test(fit)
f0, f1 = bt.f_bounds[0.05]
print(f"bounds F {bt.f_statistic:.3f} against [{f0}, {f1}], t {bt.t_statistic:.3f}: {bt.verdict}")

try:
    w = short_run_causality(fit)
    print(f"short-run Wald F {w.statistic:.3f}, p {w.p_value:.4f}")
except NoLaggedRegressors as exc:
    print(f"no short-run test: {exc}")
