"""Theta functions with rational characteristics on the upper half-plane.

Evaluates

    theta[r, s](z, tau) = sum over n in Z of
        exp(pi i (n + r)^2 tau  +  2 pi i (n + r)(z + s))

for rational characteristics ``(r, s)`` by symmetric truncation with an a
priori tail bound, together with the structural operations built on it:
constants at ``z = 0``, the phase-adjusted variant whose values generate the
coefficient field, the normalized eighth-root-of-unity multiplier of the
theta-constant functional equation, zero-location residuals, and limiting
constant Fourier terms.

Useful identities (all covered by the test suite):

* shifting ``r`` by an integer leaves the value unchanged; shifting ``s`` by
  an integer multiplies it by ``exp(2 pi i r)``;
* the function is even: theta[-r, -s](-z, tau) = theta[r, s](z, tau);
* quasi-periodicity under ``z -> z + m' + m tau``;
* for gamma = [[a, b], [c, d]] with ``ab`` and ``cd`` even,
  theta[0,0](z / (c tau + d), gamma tau) =
  kappa(gamma) (c tau + d)^(1/2) exp(pi i c z^2 / (c tau + d)) theta[0,0](z, tau)
  with ``kappa(gamma)^8 = 1``.

All evaluators run in complex double precision by default and in mpmath
arithmetic when a decimal-digit count is supplied explicitly or through the
``RM_TORUS_PRECISION`` environment variable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .errors import DegenerateProbe, DomainError, NonConvergence
from .precision import working_dps

__all__ = [
    "RationalChar",
    "UpperHalfPoint",
    "SeriesControl",
    "theta",
    "theta_constant",
    "algebraic_theta",
    "kappa",
    "theta_zero_check",
    "constant_fourier_term",
    "unit_phase",
]

#: Minimum Im(tau) accepted by the series evaluators.
IM_GUARD = 1e-8

#: Probe values below this magnitude are rejected as too close to a zero.
PROBE_GUARD = 1e-8

RationalLike = int | Fraction


def _as_fraction(x: RationalLike, what: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, Fraction)):
        raise DomainError(f"{what} must be an integer or Fraction, got {x!r}")
    return Fraction(x)


def unit_phase(x: Fraction) -> complex:
    """exp(pi i x) for rational x, exact up to one complex exponential."""
    x = Fraction(x) % 2
    if x == 0:
        return 1.0 + 0.0j
    if 2 * x == 1:
        return 1j
    if x == 1:
        return -1.0 + 0.0j
    if 2 * x == 3:
        return -1j
    return cmath.exp(1j * math.pi * float(x))


def _unit_phase_mp(x: Fraction) -> mp.mpc:
    x = Fraction(x) % 2
    return mp.expjpi(mp.mpf(x.numerator) / x.denominator)


@dataclass(frozen=True)
class RationalChar:
    """A rational theta characteristic ``(r, s)``.

    Two characteristics are considered equal when they differ componentwise by
    integers; ``canonical()`` returns the representative with both entries in
    ``[0, 1)``.  Note the analytic caveat: integer shifts of ``r`` leave the
    theta value unchanged, while integer shifts of ``s`` scale it by
    ``exp(2 pi i r)``.
    """

    r: Fraction
    s: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", _as_fraction(self.r, "characteristic r"))
        object.__setattr__(self, "s", _as_fraction(self.s, "characteristic s"))

    def canonical(self) -> RationalChar:
        return RationalChar(self.r % 1, self.s % 1)

    def negated(self) -> RationalChar:
        return RationalChar(-self.r, -self.s)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalChar):
            return NotImplemented
        return (self.r - other.r).denominator == 1 and (self.s - other.s).denominator == 1

    def __hash__(self) -> int:
        return hash((self.r % 1, self.s % 1))


@dataclass(frozen=True)
class UpperHalfPoint:
    """A point in the open upper half-plane."""

    value: complex

    def __post_init__(self) -> None:
        value = complex(self.value)
        if not (value.imag > 0):
            raise DomainError(f"point {value} is not in the upper half-plane")
        object.__setattr__(self, "value", value)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for theta series evaluation."""

    tolerance: float = 1e-15
    max_terms: int = 1_000_000

    def __post_init__(self) -> None:
        if not (self.tolerance > 0):
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_terms < 3:
            raise DomainError(f"max_terms must be at least 3, got {self.max_terms}")


_DEFAULT_CONTROL = SeriesControl()


def _coerce_tau(tau: complex | UpperHalfPoint) -> complex:
    if isinstance(tau, UpperHalfPoint):
        return tau.value
    return UpperHalfPoint(complex(tau)).value


def _series_double(
    r: float, s: float, z: complex, tau: complex, tol: float, max_terms: int
) -> complex:
    """Symmetric truncated sum centred at n0 = -round(r) with tail bound."""
    n0 = -round(r)
    im_tau = tau.imag
    im_zs = z.imag  # s is real, so Im(z + s) = Im(z)

    def term(n: int) -> complex:
        m = n + r
        return cmath.exp(1j * math.pi * (m * m * tau + 2.0 * m * (z + s)))

    total = term(n0)
    count = 1
    ring = 0
    log_2pi_imz = 2.0 * math.pi * abs(im_zs)
    while True:
        ring += 1
        total += term(n0 + ring) + term(n0 - ring)
        count += 2
        # Terms in ring k have |n + r| >= k - 1/2, hence magnitude at most
        # f(k) = exp(-pi Im(tau) (k - 1/2)^2 + 2 pi |Im z| (k + 1/2)).
        # Once the ring-to-ring ratio rho is below 1/2 the full remaining tail
        # is bounded by 4 f(ring + 1).
        log_rho = -2.0 * math.pi * im_tau * ring + log_2pi_imz
        if log_rho < -math.log(2.0):
            m = ring + 0.5
            log_next = -math.pi * im_tau * m * m + log_2pi_imz * (ring + 1.5)
            target = tol * (abs(total) + 1.0)
            if log_next + math.log(4.0) < math.log(target):
                return total
        if count + 2 > max_terms:
            raise NonConvergence(
                f"theta series did not reach tolerance {tol} within {max_terms} terms"
            )


def _series_mp(
    r: Fraction, s: Fraction, z, tau, tol: float, max_terms: int
):
    """mpmath twin of :func:`_series_double`; runs at the ambient precision."""
    n0 = -int(mp.nint(mp.mpf(r.numerator) / r.denominator)) if r.denominator != 1 else -int(r)
    rr = mp.mpf(r.numerator) / r.denominator
    ss = mp.mpf(s.numerator) / s.denominator
    z = mp.mpc(z)
    tau = mp.mpc(tau)
    im_tau = tau.imag
    im_z = z.imag

    def term(n: int):
        m = n + rr
        return mp.expjpi(m * m * tau + 2 * m * (z + ss))

    total = term(n0)
    count = 1
    ring = 0
    log_tol = mp.log(mp.mpf(tol))
    while True:
        ring += 1
        total += term(n0 + ring) + term(n0 - ring)
        count += 2
        log_rho = -2 * mp.pi * im_tau * ring + 2 * mp.pi * abs(im_z)
        if log_rho < -mp.log(2):
            m = ring + mp.mpf("0.5")
            log_next = -mp.pi * im_tau * m * m + 2 * mp.pi * abs(im_z) * (ring + mp.mpf("1.5"))
            if log_next + mp.log(4) < log_tol + mp.log(abs(total) + 1):
                return total
        if count + 2 > max_terms:
            raise NonConvergence(
                f"theta series did not reach tolerance {tol} within {max_terms} terms"
            )


def theta(
    ch: RationalChar,
    z: complex,
    tau: complex | UpperHalfPoint,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> complex:
    """theta[ch.r, ch.s](z, tau) by symmetric truncation.

    ``tau`` must lie in the upper half-plane with Im(tau) >= 1e-8.  With
    ``dps`` set (or ``RM_TORUS_PRECISION`` in the environment) the sum runs in
    mpmath arithmetic at that many decimal digits and an ``mpmath.mpc`` is
    returned; otherwise a complex double.
    """
    if not isinstance(ch, RationalChar):
        ch = RationalChar(*ch) if isinstance(ch, tuple) else RationalChar(ch)
    ctl = ctl or _DEFAULT_CONTROL
    tau_value = _coerce_tau(tau)
    if tau_value.imag < IM_GUARD:
        raise DomainError(
            f"Im(tau) = {tau_value.imag} is below the evaluation guard {IM_GUARD}"
        )
    if dps is None:
        dps = working_dps()
    if dps is None:
        return _series_double(
            float(ch.r), float(ch.s), complex(z), tau_value, ctl.tolerance, ctl.max_terms
        )
    with mp.workdps(dps + 10):
        tol = min(ctl.tolerance, mp.mpf(10) ** (-dps))
        result = _series_mp(ch.r, ch.s, z, tau_value, tol, ctl.max_terms)
    return result


def theta_constant(
    r: RationalLike,
    tau: complex | UpperHalfPoint,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> complex:
    """theta[r, 0](0, tau); invariant under r -> -r and r -> r + 1."""
    return theta(RationalChar(_as_fraction(r, "characteristic r")), 0.0, tau, ctl, dps)


def algebraic_theta(
    ch: RationalChar,
    tau: complex | UpperHalfPoint,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> complex:
    """exp(-pi i r s) * theta[r, s](0, tau), the phase-normalized constant."""
    if not isinstance(ch, RationalChar):
        raise DomainError(f"expected RationalChar, got {ch!r}")
    value = theta(ch, 0.0, tau, ctl, dps)
    x = (-ch.r * ch.s) % 2
    if dps is None and working_dps() is None:
        return unit_phase(x) * value
    return _unit_phase_mp(x) * value


def _is_parity_group_member(gamma: tuple[int, int, int, int]) -> bool:
    a, b, c, d = gamma
    return a * d - b * c == 1 and (a * b) % 2 == 0 and (c * d) % 2 == 0


def kappa(
    gamma,
    tau_probe: complex | UpperHalfPoint,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> complex:
    """Normalized multiplier of the theta-constant functional equation.

    For gamma = [[a, b], [c, d]] with det 1 and ab, cd both even, returns
    theta[0,0](0, gamma tau) / ((c tau + d)^(1/2) theta[0,0](0, tau)) with the
    principal square-root branch; the result is an eighth root of unity,
    independent of the probe point.  Probes landing within ``1e-8`` of a theta
    zero raise :class:`DegenerateProbe`.
    """
    entries = _flatten_matrix(gamma)
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in entries):
        raise DomainError(f"matrix entries must be integers, got {entries}")
    if not _is_parity_group_member(entries):
        raise DomainError(
            f"matrix {entries} is not in the even-product subgroup (det 1, ab and cd even)"
        )
    a, b, c, d = entries
    tau_value = _coerce_tau(tau_probe)
    base = theta(RationalChar(0, 0), 0.0, tau_value, ctl, dps)
    if abs(base) < PROBE_GUARD:
        raise DegenerateProbe(f"|theta(0, tau_probe)| = {abs(base)} < {PROBE_GUARD}")
    moved = (a * tau_value + b) / (c * tau_value + d)
    lifted = theta(RationalChar(0, 0), 0.0, moved, ctl, dps)
    if dps is None and working_dps() is None:
        root = cmath.sqrt(c * tau_value + d)
    else:
        root = mp.sqrt(c * tau_value + d)
    return lifted / (root * base)


def _flatten_matrix(gamma) -> tuple[int, int, int, int]:
    try:
        (a, b), (c, d) = gamma
    except (TypeError, ValueError):
        try:
            a, b, c, d = gamma
        except (TypeError, ValueError) as exc:
            raise DomainError(f"expected a 2x2 integer matrix, got {gamma!r}") from exc
    return int(a), int(b), int(c), int(d)


def theta_zero_check(
    ch: RationalChar,
    p: int,
    q: int,
    tau: complex | UpperHalfPoint,
    ctl: SeriesControl | None = None,
) -> float:
    """|theta[r, s](z0, tau)| at the lattice zero indexed by integers (p, q).

    The zero set of theta[r, s](., tau) is the lattice
    ``z0 = (1/2 - r + p) tau + (1/2 - s + q)``.  Returns the absolute value of
    the series there, which should vanish to evaluation accuracy.
    """
    if not isinstance(ch, RationalChar):
        raise DomainError(f"expected RationalChar, got {ch!r}")
    tau_value = _coerce_tau(tau)
    z0 = (0.5 - float(ch.r) + p) * tau_value + (0.5 - float(ch.s) + q)
    return abs(theta(ch, z0, tau_value, ctl))


def constant_fourier_term(
    r: RationalLike,
    l: int,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> complex:
    """Limiting constant Fourier coefficient of theta[r, 0](0, l * i T) as T grows.

    Evaluates at heights ``50 l^2`` and ``100 l^2`` and Richardson-extrapolates;
    the result is ~1 when r is an integer and below 1e-12 otherwise.
    """
    r = _as_fraction(r, "characteristic r")
    if not isinstance(l, int) or l <= 0:
        raise DomainError(f"level must be a positive integer, got {l!r}")
    v1 = theta_constant(r, complex(0.0, 50.0 * l * l), ctl, dps)
    v2 = theta_constant(r, complex(0.0, 100.0 * l * l), ctl, dps)
    return 2 * v2 - v1
