"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class AlgApproxError(Exception):
    """Base class for every error raised by this package."""


# polynomial layer

class PolynomialSyntaxError(AlgApproxError, ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        pointer = ""
        if text:
            pointer = f"\n  {text}\n  {' ' * position}^"
        super().__init__(f"{message} at position {position}{pointer}")


class UnknownVariable(AlgApproxError, ValueError):
    pass


class VariableMismatch(AlgApproxError, ValueError):
    pass


class DimensionMismatch(AlgApproxError, ValueError):
    pass


class RankDeficientMatrix(AlgApproxError, ValueError):
    pass


class DegreeOverflow(AlgApproxError, ArithmeticError):
    pass


# presentations

class SchemaError(AlgApproxError, ValueError):
    pass


class OriginNotMember(AlgApproxError, ValueError):
    pass


class WrongCodimension(AlgApproxError, ValueError):
    pass


class InconsistentVotes(AlgApproxError):
    def __init__(self, message: str, slopes=None):
        self.slopes = list(slopes or [])
        super().__init__(message)


# metric

class EmptyAtRadius(AlgApproxError):
    def __init__(self, radius: float, message: str | None = None):
        self.radius = radius
        super().__init__(message or f"no sample converged on the sphere of radius {radius:g}")


class EmptyCloud(AlgApproxError, ValueError):
    pass


class InsufficientData(AlgApproxError, ValueError):
    pass


class HypothesisViolated(AlgApproxError):
    pass


# approximator

class CodimensionZero(AlgApproxError, ValueError):
    pass


class RegularityRejected(AlgApproxError):
    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class ProjectionSearchExhausted(AlgApproxError):
    pass


class EvenExponent(AlgApproxError, ValueError):
    pass


class ExponentSearchExhausted(AlgApproxError):
    def __init__(self, message: str, failures=None):
        # failures: list of (m, reason) pairs
        self.failures = list(failures or [])
        super().__init__(message)
