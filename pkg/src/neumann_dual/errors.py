"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """Invalid domain description or out-of-range coordinate."""


class PreconditionError(ValueError):
    """An operation was called on input violating its contract."""


class UnsupportedError(ValueError):
    """The requested operation is not defined for this domain or regime."""


class ExponentError(ValueError):
    """Exponent pair outside the supported range."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge."""
