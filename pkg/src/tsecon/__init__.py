"""Time-series econometrics toolkit: unit roots, cointegration, ARDL bounds testing,
Toda-Yamamoto causality and VAR structural analysis."""

__version__ = "0.1.0"
