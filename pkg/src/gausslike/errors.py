"""Exception types shared across the package.

Each class carries the CLI exit code it maps to.
"""

from __future__ import annotations


class GaussLikeError(Exception):
    exit_code = 1


class InvalidWordError(GaussLikeError, ValueError):
    exit_code = 2


class ConfigError(GaussLikeError, ValueError):
    exit_code = 2


class SizeCapError(GaussLikeError):
    """Raised when a request would exceed a desk-scale enumeration cap."""

    exit_code = 3

    def __init__(self, cap: str, requested, limit):
        self.cap = cap
        self.requested = requested
        self.limit = limit
        super().__init__(f"size cap '{cap}' exceeded: requested {requested}, limit {limit}")


class NumericError(GaussLikeError, ArithmeticError):
    exit_code = 4


class ConsistencyError(NumericError):
    """An internal monotonicity/consistency check failed beyond its tolerance."""


class ValidationFailure(GaussLikeError):
    exit_code = 5
