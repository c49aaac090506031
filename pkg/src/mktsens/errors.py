"""Exception hierarchy shared across the package.

Every error raised deliberately by mktsens derives from :class:`MktsensError`,
so callers (including the CLI) can map failures to a small set of outcomes:
configuration problems, data problems, and capacity limits.
"""

from __future__ import annotations


class MktsensError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MktsensError):
    """A run configuration is missing, malformed, or internally inconsistent."""


class DataError(MktsensError):
    """Input data failed validation (bad CSV rows, missing chains, and so on)."""


class CapacityError(MktsensError):
    """A request exceeds the exact-enumeration limits of the implementation."""


class DegenerateMarketError(DataError):
    """A market operation was asked to divide by a zero total (empty market)."""


class OutcomeEvaluationError(MktsensError):
    """A user-supplied outcome function failed or returned inconsistent metrics."""
