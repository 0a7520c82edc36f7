"""Exception types shared across the toolkit."""


class VolnetError(Exception):
    """Base class for all toolkit errors."""


class InputError(VolnetError):
    """Invalid argument, precondition violation, or unusable input data."""


class ParseError(InputError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(InputError):
    """Value outside its mathematical domain (e.g. non-positive price)."""


class NumericError(VolnetError):
    """Numerical failure (overflow, non-finite likelihood) during evaluation."""


class FitError(VolnetError):
    """Estimation failed to converge; carries best-so-far details."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class GenerationError(VolnetError):
    """Synthetic-data generation produced an invalid path."""
