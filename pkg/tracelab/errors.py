"""tracelab の例外定義

Every error raised on purpose by the library derives from ``TraceLabError``
(itself a ``ValueError``), so callers can catch the whole family at once.
"""
from __future__ import annotations

from typing import Optional


class TraceLabError(ValueError):
    pass


# 入力の検証

class NotPrime(TraceLabError):
    pass


class TooLarge(TraceLabError):
    pass


class LengthMismatch(TraceLabError):
    pass


class CostCapExceeded(TraceLabError):
    pass


class NotDisjoint(TraceLabError):
    pass


class OrderViolation(TraceLabError):
    pass


class ContextMismatch(TraceLabError):
    pass


class SingularMatrix(TraceLabError):
    pass


class NotASubgroup(TraceLabError):
    pass


class NotInvolution(TraceLabError):
    pass


class ProfileMismatch(TraceLabError):
    pass


class PrimeTooSmall(TraceLabError):
    pass


class CapExceeded(TraceLabError):
    pass


# 数値・検証スイート

class CalibrationError(TraceLabError):
    """Batch evaluator disagrees with its direct oracle."""


class RegressionFailure(TraceLabError):
    """A residual exceeded twice its frozen value."""


# 設定ファイル

class ConfigParseError(TraceLabError):
    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConfigValidationError(TraceLabError):
    def __init__(self, message: str, field: Optional[str] = None) -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
