from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from tsecon.dataframe import Frame, MonthStamp, Series, write_csv
from tsecon.synthetic import commodity_pair

ROOT = Path(__file__).resolve().parents[1]
SNAPSHOT = ROOT / "data" / "imf_dubai_gasus_1992_2018.csv"
REPRO_CONFIG = ROOT / "configs" / "reproduction.yaml"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def pair() -> Frame:
    return commodity_pair(322, seed=1)


@pytest.fixture(scope="session")
def log_pair(pair) -> Frame:
    return Frame(Series("ln" + s.name, s.start, np.log(s.values)) for s in pair)


@pytest.fixture(scope="session")
def pair_csv(tmp_path_factory, pair) -> Path:
    path = tmp_path_factory.mktemp("data") / "pair.csv"
    write_csv(pair, path)
    return path


@pytest.fixture(scope="session")
def repro_bundle(tmp_path_factory, pair_csv):
    """The reproduction config run once on the synthetic pair."""
    from tsecon.pipeline import load_config, run_pipeline

    return run_pipeline(load_config(REPRO_CONFIG), tmp_path_factory.mktemp("bundle"), pair_csv)


def random_walk(rng: np.random.Generator, n: int, drift: float = 0.0) -> np.ndarray:
    return np.cumsum(drift + rng.standard_normal(n))


def ar1(rng: np.random.Generator, n: int, phi: float, burn: int = 100) -> np.ndarray:
    e = rng.standard_normal(n + burn)
    x = np.zeros(n + burn)
    for t in range(1, n + burn):
        x[t] = phi * x[t - 1] + e[t]
    return x[burn:]


def monthly(name: str, values, start: MonthStamp = MonthStamp(2000, 1)) -> Series:
    return Series(name, start, np.asarray(values, dtype=float))
