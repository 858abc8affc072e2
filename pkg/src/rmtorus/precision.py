"""Precision selection shared across numerical kernels.

Computations default to complex double precision.  Setting the environment
variable ``RM_TORUS_PRECISION`` to a positive integer switches the series
evaluators and the linear-algebra kernels that honour it to mpmath arithmetic
with that many decimal digits.
"""

from __future__ import annotations

import os

from .errors import DomainError

__all__ = ["PRECISION_ENV", "working_dps", "effective_dps"]

PRECISION_ENV = "RM_TORUS_PRECISION"


def working_dps() -> int | None:
    """Decimal digits requested via the environment, or None for double precision."""
    raw = os.environ.get(PRECISION_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        dps = int(raw)
    except ValueError as exc:
        raise DomainError(f"{PRECISION_ENV} must be a positive integer, got {raw!r}") from exc
    if dps <= 0:
        raise DomainError(f"{PRECISION_ENV} must be positive, got {dps}")
    return dps


def effective_dps(dps: int | None, floor: int) -> int:
    """Resolve an explicit/environment dps against a kernel's minimum requirement."""
    if dps is None:
        dps = working_dps() or 0
    return max(dps, floor)
