"""Exception types raised across the package."""


class PsdSparError(Exception):
    """Base class for all errors raised by psdspar."""


class NonFinite(PsdSparError, ValueError):
    pass


class NoConvergence(PsdSparError, ArithmeticError):
    pass


class NotPsd(PsdSparError, ValueError):
    pass


class ZeroSum(PsdSparError, ValueError):
    pass


class SumMismatch(PsdSparError, ValueError):
    pass


class Singular(PsdSparError, ArithmeticError):
    pass


class RangeViolation(PsdSparError, ValueError):
    pass


class BadEps(PsdSparError, ValueError):
    pass


class ExhaustedAttempts(PsdSparError, RuntimeError):
    pass


class CapExceeded(PsdSparError, RuntimeError):
    pass


class NotMinimal(PsdSparError, ValueError):
    pass


class PreconditionError(PsdSparError, ValueError):
    pass


class TooLarge(PsdSparError, ValueError):
    pass


class InvalidTable(PsdSparError, ValueError):
    pass


class DecompositionMismatch(PsdSparError, ValueError):
    pass


class NotSymmetric(PsdSparError, ValueError):
    pass


class Disconnected(PsdSparError, ValueError):
    pass


class ZeroWeights(PsdSparError, ValueError):
    pass


class NoCollision(PsdSparError, ValueError):
    pass


class TooSmall(PsdSparError, ValueError):
    pass


class DegenerateSize(PsdSparError, ValueError):
    pass


class DimensionMismatch(PsdSparError, ValueError):
    pass


class ParseError(PsdSparError, ValueError):
    """Malformed input file. ``line`` is 1-based, or None if not line-specific."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
