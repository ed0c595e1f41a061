"""Exception hierarchy shared by every module."""

from __future__ import annotations


class TsEconError(Exception):
    """Base class for all package errors."""


class LoadError(TsEconError):
    pass


class MissingObservation(LoadError):
    def __init__(self, date):
        super().__init__(f"missing observation for {date}")
        self.date = date


class DuplicateDate(LoadError):
    def __init__(self, date):
        super().__init__(f"duplicate date {date}")
        self.date = date


class ParseError(LoadError):
    def __init__(self, row: int, column: str, text: str = ""):
        super().__init__(f"cannot parse row {row}, column {column!r}: {text!r}")
        self.row = row
        self.column = column


class DomainError(TsEconError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class LengthError(TsEconError):
    pass


class ZeroVariance(TsEconError):
    pass


class InsufficientData(TsEconError):
    pass


class RankDeficient(TsEconError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design matrix is rank deficient; dependent columns: {self.columns}")


class BandwidthTooLarge(TsEconError):
    pass


class SingularRestrictionCovariance(TsEconError):
    pass


class SingularSystem(TsEconError):
    pass


class ExcessIntegration(TsEconError):
    pass


class UnitRootDenominator(TsEconError):
    pass


class NoLaggedRegressors(TsEconError):
    pass


class DegenerateCovariance(TsEconError):
    pass


class MissingCriticalValues(TsEconError):
    pass


class UnsupportedPValue(TsEconError):
    pass


class UnsupportedFamily(TsEconError):
    pass


class ConfigError(TsEconError):
    pass


class NetworkError(TsEconError):
    pass


class SchemaError(TsEconError):
    pass


class MissingArtifact(TsEconError):
    pass
