"""Display rounding helpers.

All user-facing tables and diagrams round through these functions so that the
same value always prints the same way.  Binary floats are routed through
``Decimal(str(v))`` before quantizing, which keeps e.g. 2.675 rounding on its
printed digits rather than on its binary representation.
"""

from __future__ import annotations

import math
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal


def floor_int(value: float) -> int:
    """Largest integer not exceeding ``value``."""
    return math.floor(value)


def round_half_up(value: float, decimals: int = 0) -> float:
    """Round with ties going away from zero on the decimal rendering."""
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(str(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def truncate(value: float, decimals: int = 0) -> float:
    """Chop ``value`` toward zero at ``decimals`` decimal places."""
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(str(value)).quantize(quantum, rounding=ROUND_DOWN))


def round_half_up_int(value: float) -> int:
    """Round to the nearest integer, ties away from zero."""
    return int(Decimal(str(value)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def fmt_fixed(value: float, decimals: int) -> str:
    """Format a half-up rounded value with exactly ``decimals`` places."""
    return f"{round_half_up(value, decimals):.{decimals}f}"


def fmt_truncated(value: float, decimals: int) -> str:
    """Format a truncated value with exactly ``decimals`` places."""
    return f"{truncate(value, decimals):.{decimals}f}"
