"""Exception hierarchy for the rmtorus package.

Every structured failure raises a subclass of :class:`RMTorusError`; the CLI
maps each to a nonzero exit status with the error name on one diagnostic line.
"""

from __future__ import annotations

__all__ = [
    "RMTorusError",
    "DomainError",
    "NonConvergence",
    "DegenerateProbe",
    "NotSL2",
    "NotHyperbolic",
    "DegreeTooSmall",
    "IndexOutOfRange",
    "RankDeficient",
    "LeadingCoeffBelowThreshold",
    "OddLevel",
    "OddWeight",
    "TruncationExceeded",
    "RationalInput",
    "NotCuspType",
    "QuadratureFailure",
    "CombinatorialCap",
]


class RMTorusError(Exception):
    """Base class for all structured package errors."""


class DomainError(RMTorusError):
    """Input outside the mathematical domain (e.g. tau not in the upper half-plane)."""


class NonConvergence(RMTorusError):
    """A truncated series failed to meet tolerance within the term budget."""


class DegenerateProbe(RMTorusError):
    """A probe point landed too close to a theta zero; resample."""


class NotSL2(RMTorusError):
    """Integer matrix does not have determinant 1."""


class NotHyperbolic(RMTorusError):
    """Matrix trace has absolute value <= 2; no real quadratic fixed point."""


class DegreeTooSmall(RMTorusError):
    """The lower-left entry c violates c >= a+d+2."""


class IndexOutOfRange(RMTorusError):
    """A basis/tensor index lies outside its declared 1-based range."""


class RankDeficient(RMTorusError):
    """A block matrix fell below full row rank at the given tau."""


class LeadingCoeffBelowThreshold(RMTorusError):
    """No usable leading coefficient; tau appears degenerate for this relation."""


class OddLevel(RMTorusError):
    """The level l = c(a+d) must be even for this normalization."""


class OddWeight(RMTorusError):
    """The weight w = floor((a+d+1)/2) must be even for averaging."""


class TruncationExceeded(RMTorusError):
    """A reduction produced a term beyond the configured truncation degree."""


class RationalInput(RMTorusError):
    """A continued-fraction expansion was requested for a rational number."""


class NotCuspType(RMTorusError):
    """Integrand fails exponential decay at a geodesic endpoint; integral diverges."""


class QuadratureFailure(RMTorusError):
    """Adaptive quadrature hit its evaluation cap before reaching tolerance."""


class CombinatorialCap(RMTorusError):
    """A minor enumeration would exceed the configured combinatorial cap."""
