"""Monthly series containers, CSV ingestion and the basic transforms.

A :class:`Series` is a contiguous run of monthly observations that starts at a
:class:`MonthStamp`; a :class:`Frame` holds several series that share the same
start and length.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import stats

from .errors import (
    DomainError,
    DuplicateDate,
    LengthError,
    LoadError,
    MissingObservation,
    ParseError,
    ZeroVariance,
)

_DATE_RE = re.compile(r"^\s*(\d{4})\s*(?:-|M|m)\s*(\d{1,2})(?:-\d{1,2})?\s*$")


@dataclass(frozen=True, order=True)
class MonthStamp:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthStamp":
        """Parse ``YYYY-MM``, ``YYYY-MM-DD`` or ``YYYYMmm``."""
        m = _DATE_RE.match(text)
        if m is None:
            raise ValueError(f"not a monthly date: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def ordinal(self) -> int:
        return self.year * 12 + self.month - 1

    @classmethod
    def from_ordinal(cls, n: int) -> "MonthStamp":
        return cls(n // 12, n % 12 + 1)

    def shift(self, months: int) -> "MonthStamp":
        return MonthStamp.from_ordinal(self.ordinal + months)

    def succ(self) -> "MonthStamp":
        return self.shift(1)

    def __sub__(self, other: "MonthStamp") -> int:
        return self.ordinal - other.ordinal

    def __str__(self) -> str:
        return f"{self.year:04d}M{self.month:02d}"

    def iso(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Series:
    name: str
    start: MonthStamp
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _readonly(self.values)
        if arr.ndim != 1 or arr.size < 1:
            raise LengthError("a series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise DomainError("series contains non-finite values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> MonthStamp:
        return self.start.shift(len(self) - 1)

    def dates(self) -> list[MonthStamp]:
        return [self.start.shift(i) for i in range(len(self))]

    def rename(self, name: str) -> "Series":
        return Series(name, self.start, self.values)

    def window(self, start: MonthStamp, length: int) -> "Series":
        off = start - self.start
        if off < 0 or off + length > len(self):
            raise LengthError(f"window {start}+{length} outside {self.start}..{self.end}")
        return Series(self.name, start, self.values[off:off + length])


class Frame:
    """Ordered set of aligned series."""

    def __init__(self, columns: Iterable[Series]):
        cols = list(columns)
        if not cols:
            raise LengthError("a frame needs at least one column")
        first = cols[0]
        names = set()
        for s in cols:
            if s.start != first.start or len(s) != len(first):
                raise LengthError(
                    f"column {s.name} spans {s.start}+{len(s)}, expected {first.start}+{len(first)}")
            if s.name in names:
                raise ValueError(f"duplicate column name {s.name}")
            names.add(s.name)
        self._cols = {s.name: s for s in cols}

    @classmethod
    def align(cls, columns: Iterable[Series]) -> "Frame":
        """Build a frame from the common overlapping window of the columns."""
        cols = list(columns)
        start = max(s.start for s in cols)
        end = min(s.end for s in cols)
        length = end - start + 1
        if length < 1:
            raise LengthError("series do not overlap")
        return cls(s.window(start, length) for s in cols)

    @property
    def names(self) -> list[str]:
        return list(self._cols)

    @property
    def start(self) -> MonthStamp:
        return next(iter(self._cols.values())).start

    def __len__(self) -> int:
        return len(next(iter(self._cols.values())))

    def __getitem__(self, name: str) -> Series:
        return self._cols[name]

    def __contains__(self, name: str) -> bool:
        return name in self._cols

    def __iter__(self) -> Iterator[Series]:
        return iter(self._cols.values())

    def select(self, names: Sequence[str]) -> "Frame":
        return Frame(self._cols[n] for n in names)

    def values(self) -> np.ndarray:
        """T x n matrix of the columns in order."""
        return np.column_stack([s.values for s in self._cols.values()])

    def dates(self) -> list[MonthStamp]:
        return next(iter(self._cols.values())).dates()

    def __repr__(self) -> str:
        return f"Frame({self.names}, start={self.start}, n={len(self)})"


def load_csv(path, date_column: str = "date", value_columns: Sequence[str] | None = None) -> Frame:
    """Read a monthly CSV with a header row into a :class:`Frame`.

    Dates must be strictly consecutive months; a gap raises
    :class:`MissingObservation` for the first absent month.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise LoadError(f"{path} is empty") from None
        if date_column not in header:
            raise LoadError(f"date column {date_column!r} not in header {header}")
        if value_columns is None:
            value_columns = [h for h in header if h != date_column]
        missing = [c for c in value_columns if c not in header]
        if missing:
            raise LoadError(f"columns {missing} not in header {header}")
        di = header.index(date_column)
        idx = [header.index(c) for c in value_columns]
        dates: list[MonthStamp] = []
        rows: list[list[float]] = []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                d = MonthStamp.parse(row[di])
            except (ValueError, IndexError):
                raise ParseError(rownum, date_column, row[di] if di < len(row) else "") from None
            vals = []
            for c, j in zip(value_columns, idx):
                cell = row[j].strip() if j < len(row) else ""
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(rownum, c, cell) from None
                if not math.isfinite(v):
                    raise ParseError(rownum, c, cell)
                vals.append(v)
            if dates:
                step = d - dates[-1]
                if step == 0 or d in dates:
                    raise DuplicateDate(d)
                if step < 0:
                    raise LoadError(f"dates out of order at row {rownum}: {d} after {dates[-1]}")
                if step > 1:
                    raise MissingObservation(dates[-1].succ())
            dates.append(d)
            rows.append(vals)
    if not rows:
        raise LoadError(f"{path} has no data rows")
    data = np.array(rows, dtype=float)
    return Frame(Series(c, dates[0], data[:, j]) for j, c in enumerate(value_columns))


def write_csv(frame: Frame, path, date_column: str = "date") -> None:
    """Write a frame in the format read by :func:`load_csv`.

    Values use ``repr`` so a reload is bit-exact.
    """
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([date_column, *frame.names])
        data = frame.values()
        for d, row in zip(frame.dates(), data):
            w.writerow([d.iso(), *(repr(float(v)) for v in row)])


_PREFIX = {"log": "ln_", "diff": "d_", "logdiff": "dln_"}


def transform(s: Series, kind: str) -> Series:
    """Natural log, first difference, or log return of a series."""
    if kind not in _PREFIX:
        raise ValueError(f"unknown transform {kind!r}")
    x = s.values
    if kind in ("log", "logdiff"):
        bad = np.flatnonzero(x <= 0)
        if bad.size:
            raise DomainError(f"log of nonpositive value in {s.name}", int(bad[0]))
        x = np.log(x)
    if kind == "log":
        return Series(_PREFIX[kind] + s.name, s.start, x)
    if len(s) < 2:
        raise LengthError(f"{kind} needs at least two observations")
    return Series(_PREFIX[kind] + s.name, s.start.succ(), np.diff(x))


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    mean: float
    std: float
    skewness: float
    kurtosis: float
    jarque_bera: float
    jb_pvalue: float


def describe(s: Series | np.ndarray) -> DescriptiveStats:
    """Moments and Jarque-Bera normality statistic.

    Skewness and kurtosis use n-divisor central moments; kurtosis is the raw
    fourth standardized moment (3 for a Gaussian).
    """
    x = np.asarray(s.values if isinstance(s, Series) else s, dtype=float)
    n = x.size
    if n < 4:
        raise LengthError("describe needs at least 4 observations")
    mean = x.mean()
    d = x - mean
    m2 = np.mean(d**2)
    if m2 <= 0 or np.ptp(x) == 0:
        raise ZeroVariance("constant series")
    skew = np.mean(d**3) / m2**1.5
    kurt = np.mean(d**4) / m2**2
    jb = n * (skew**2 / 6 + (kurt - 3) ** 2 / 24)
    return DescriptiveStats(
        n=n,
        mean=float(mean),
        std=float(np.sqrt(np.sum(d**2) / (n - 1))),
        skewness=float(skew),
        kurtosis=float(kurt),
        jarque_bera=float(jb),
        jb_pvalue=float(stats.chi2.sf(jb, 2)),
    )
