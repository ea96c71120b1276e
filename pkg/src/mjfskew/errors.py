"""Exception hierarchy shared by all modules."""


class MJFError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MJFError, ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(MJFError, ArithmeticError):
    """An iterative routine hit its iteration cap.

    The offending inputs are kept on the instance so callers can log them.
    """

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            details = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} ({details})"
        super().__init__(message)


class ContractError(MJFError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class DataError(MJFError, ValueError):
    """Input data violates a validity requirement (e.g. a non-positive price)."""


class ParseError(DataError):
    """A row of tabular input could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegenerateDataError(DataError):
    """Data carries no spread, so a statistic is undefined."""


class ConfigError(MJFError, ValueError):
    """Invalid run configuration (bad option, unwritable output, ...)."""
