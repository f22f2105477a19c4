"""Exception types raised across the package."""


class EALSError(Exception):
    """Base class for package errors."""


class DataError(EALSError, ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DimensionError(EALSError, ValueError):
    """Shapes of data, weights or factors do not agree."""


class SingularUpdateError(EALSError, ArithmeticError):
    """A coordinate update hit a non-positive denominator.

    ``side`` is ``"row"`` or ``"col"`` and ``index`` the offending row/column.
    """

    def __init__(self, side, index, denominator=None):
        msg = f"non-positive denominator updating {side} {index}"
        if denominator is not None:
            msg += f" (denominator={denominator!r})"
        super().__init__(msg)
        self.side = side
        self.index = index
        self.denominator = denominator


class UncertifiedWeightsError(EALSError, ValueError):
    """Weight model may contain negative cells and no lambda guard was met."""


class ConvergenceError(EALSError, RuntimeError):
    """Iterative routine hit its iteration cap."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual={residual!r})")
        self.residual = residual
