"""Congruence groups, continued fractions, and geodesic period integrals.

Four layers, bottom up:

* exact integer membership tests for principal congruence groups, the
  theta-parity groups Gamma_{n,2n}, and their diagonal-conjugate bracket
  variants;
* exact continued-fraction expansions of real quadratic surds with minimal
  period detection, convergents, and the Lyapunov growth rate of the
  denominators;
* limiting symbols: the finite cusp-to-cusp segment lists (one continued
  fraction period, or a single hyperbolic translate) whose scaled sum
  represents the geodesic limit at the surd, ready for integration;
* numerical integration of theta-constant products and determinant
  coefficient forms along geodesics between cusps, by splitting each geodesic
  at its apex and pulling both halves to vertical rays; evaluation near the
  real axis goes through an exact transformation chain (integer words in the
  generators acting on characteristics) so the series always runs at a
  comfortable height.

The final consumer is :func:`averaged_relations`, which integrates every
modular-normalized presentation coefficient over the limiting symbol of the
fixed surd, producing a presentation-shaped object independent of tau.
"""

from __future__ import annotations

import cmath
import heapq
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np

from .core import QuadraticSurd, RMData, _egcd, alpha
from .errors import (
    DomainError,
    NotCuspType,
    NotHyperbolic,
    NotSL2,
    OddLevel,
    OddWeight,
    QuadratureFailure,
    RationalInput,
)
from .presentation import Relation, RelationTerm
from .theta import _unit_phase_mp, unit_phase

__all__ = [
    "Cusp",
    "GroupSpec",
    "CFExpansion",
    "SymbolChain",
    "QuadratureControl",
    "IntegralResult",
    "ThetaProductHandle",
    "CoefficientHandle",
    "AveragedPresentation",
    "member",
    "cf_expand",
    "convergents",
    "lyapunov",
    "lyapunov_empirical",
    "limiting_symbol",
    "is_cusp_numeric",
    "integrate_geodesic",
    "averaged_relations",
    "averaged_json",
    "coefficient_handles",
    "relation_values",
]


# ---------------------------------------------------------------------------
# cusps and congruence groups
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cusp:
    """A point of the rational boundary: p/q in lowest terms, (1, 0) = infinity."""

    p: int
    q: int

    def __post_init__(self) -> None:
        p, q = self.p, self.q
        if not isinstance(p, int) or not isinstance(q, int):
            raise DomainError(f"cusp entries must be integers, got ({p!r}, {q!r})")
        if p == 0 and q == 0:
            raise DomainError("cusp (0, 0) is not a projective point")
        g = math.gcd(abs(p), abs(q))
        p, q = p // g, q // g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def is_infinity(self) -> bool:
        return self.q == 0

    def value(self) -> float:
        if self.is_infinity:
            raise DomainError("infinity has no finite value")
        return self.p / self.q


def _as_cusp(x) -> Cusp:
    if isinstance(x, Cusp):
        return x
    try:
        p, q = x
    except (TypeError, ValueError) as exc:
        raise DomainError(f"expected a cusp (p, q), got {x!r}") from exc
    return Cusp(int(p), int(q))


@dataclass(frozen=True)
class GroupSpec:
    """A congruence subgroup: principal, theta-parity, or bracket variant."""

    kind: str
    n: int
    m: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("principal", "igusa", "bracket"):
            raise DomainError(f"unknown group kind {self.kind!r}")
        if self.n < 1:
            raise DomainError(f"group level must be positive, got {self.n}")
        if self.kind == "bracket":
            if self.m is None or self.m < 1 or self.m % 2 != 0:
                raise DomainError(
                    f"bracket conjugation parameter must be a positive even integer, got {self.m}"
                )
        elif self.m is not None:
            raise DomainError(f"{self.kind} group takes no second parameter")

    @staticmethod
    def principal(n: int) -> GroupSpec:
        """Gamma(n): congruent to the identity mod n."""
        return GroupSpec("principal", n)

    @staticmethod
    def igusa(n: int) -> GroupSpec:
        """Gamma_{n,2n}: Gamma(n) with both row products divisible by 2n."""
        return GroupSpec("igusa", n)

    @staticmethod
    def bracket(n: int, m: int) -> GroupSpec:
        """Theta-parity matrices whose diag(m,1) conjugate lies in Gamma_{n,2n}."""
        return GroupSpec("bracket", n, m)

    def describe(self) -> dict:
        out = {"kind": self.kind, "n": self.n}
        if self.m is not None:
            out["m"] = self.m
        return out


def _flatten2(gamma) -> tuple[int, int, int, int]:
    try:
        (x, y), (z, w) = gamma
    except (TypeError, ValueError):
        try:
            x, y, z, w = gamma
        except (TypeError, ValueError) as exc:
            raise DomainError(f"expected a 2x2 integer matrix, got {gamma!r}") from exc
    entries = (int(x), int(y), int(z), int(w))
    return entries


def _igusa_member(x: int, y: int, z: int, w: int, n: int) -> bool:
    if (x - 1) % n or (w - 1) % n or y % n or z % n:
        return False
    return (x * y) % (2 * n) == 0 and (z * w) % (2 * n) == 0


def member(gamma, spec: GroupSpec) -> bool:
    """Exact integer membership test."""
    x, y, z, w = _flatten2(gamma)
    if x * w - y * z != 1:
        return False
    if spec.kind == "principal":
        n = spec.n
        return (x - 1) % n == 0 and (w - 1) % n == 0 and y % n == 0 and z % n == 0
    if spec.kind == "igusa":
        return _igusa_member(x, y, z, w, spec.n)
    # bracket: theta-parity plus the diag(m,1) conjugate landing in Gamma_{n,2n}
    if (x * y) % 2 or (z * w) % 2:
        return False
    m = spec.m
    if z % m:
        return False
    return _igusa_member(x, m * y, z // m, w, spec.n)


# ---------------------------------------------------------------------------
# continued fractions of quadratic surds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CFExpansion:
    """Eventually periodic continued fraction of a surd in (0, 1).

    ``integer_part`` records the floor subtracted to land in (0, 1); the
    partial quotients are those of the fractional part.
    """

    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    integer_part: int = 0

    def quotient(self, n: int) -> int:
        """The n-th partial quotient, 1-based."""
        if n < 1:
            raise DomainError(f"quotient index must be >= 1, got {n}")
        if n <= len(self.preperiod):
            return self.preperiod[n - 1]
        return self.period[(n - len(self.preperiod) - 1) % len(self.period)]


def cf_expand(theta: QuadraticSurd, max_states: int = 100_000) -> CFExpansion:
    """Exact continued-fraction expansion with minimal-period detection.

    Iterates x -> 1/x - floor(1/x) in exact surd arithmetic; the preperiod
    ends at the first repeated state, which also yields the minimal period.
    """
    if not isinstance(theta, QuadraticSurd):
        raise DomainError(f"expected a QuadraticSurd, got {theta!r}")
    if theta.is_rational():
        raise RationalInput(f"{theta} is rational; expansion does not terminate")
    integer_part = theta.floor()
    x = theta - integer_part
    quotients: list[int] = []
    seen: dict[QuadraticSurd, int] = {}
    while len(quotients) < max_states:
        if x in seen:
            start = seen[x]
            return CFExpansion(
                preperiod=tuple(quotients[:start]),
                period=tuple(quotients[start:]),
                integer_part=integer_part,
            )
        seen[x] = len(quotients)
        y = x.inverse()
        k = y.floor()
        quotients.append(k)
        x = y - k
    raise DomainError(f"no period found within {max_states} states")


def convergents(cf: CFExpansion, n: int) -> tuple[int, int, tuple[tuple[int, int], tuple[int, int]]]:
    """(p_n, q_n, g_n) for the fractional part, with g_n = [[p_{n-1}, p_n], [q_{n-1}, q_n]]."""
    if n < 0:
        raise DomainError(f"convergent index must be >= 0, got {n}")
    p_prev, p_cur = 1, 0
    q_prev, q_cur = 0, 1
    for i in range(1, n + 1):
        k = cf.quotient(i)
        p_prev, p_cur = p_cur, k * p_cur + p_prev
        q_prev, q_cur = q_cur, k * q_cur + q_prev
    return p_cur, q_cur, ((p_prev, p_cur), (q_prev, q_cur))


def _period_matrix(cf: CFExpansion) -> tuple[int, int, int, int]:
    a, b, c, d = 1, 0, 0, 1
    for k in cf.period:
        # multiply on the right by [[0, 1], [1, k]]
        a, b = b, a + k * b
        c, d = d, c + k * d
    return a, b, c, d


def lyapunov(theta: QuadraticSurd) -> float:
    """Denominator growth rate: log(spectral radius of the period product)/m."""
    cf = cf_expand(theta)
    a, b, c, d = _period_matrix(cf)
    tr = a + d
    det = a * d - b * c
    m = len(cf.period)
    with mp.workdps(60):
        radius = (abs(tr) + mp.sqrt(mp.mpf(tr) ** 2 - 4 * det)) / 2
        return float(mp.log(radius) / m)


def lyapunov_empirical(theta: QuadraticSurd, n1: int = 50, n2_max: int = 200) -> float:
    """Endpoint slope of log q_n between n1 and the largest aligned n <= n2_max.

    The endpoints are taken a whole number of periods apart so the periodic
    fluctuation of log q_n - n*lambda cancels exactly.
    """
    cf = cf_expand(theta)
    m = len(cf.period)
    n2 = n2_max - ((n2_max - n1) % m)
    if n2 <= n1:
        raise DomainError(f"no aligned endpoint in ({n1}, {n2_max}]")
    _, q1, _ = convergents(cf, n1)
    _, q2, _ = convergents(cf, n2)
    return (math.log(q2) - math.log(q1)) / (n2 - n1)


# ---------------------------------------------------------------------------
# limiting symbols
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolChain:
    """A finite weighted chain of cusp-to-cusp geodesic segments."""

    segments: tuple[tuple[Cusp, Cusp], ...]
    scale: float
    weight_vectors: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def __post_init__(self) -> None:
        if not (self.scale > 0):
            raise DomainError(f"scale must be positive, got {self.scale}")
        if self.weight_vectors is not None:
            ns, ms = self.weight_vectors
            if len(ns) != len(ms):
                raise DomainError("weight vectors must have equal length")


def _mobius_int(gamma: tuple[int, int, int, int], cusp: Cusp) -> Cusp:
    a, b, c, d = gamma
    return Cusp(a * cusp.p + b * cusp.q, c * cusp.p + d * cusp.q)


def limiting_symbol(
    theta: QuadraticSurd,
    spec: GroupSpec | None = None,
    hyperbolic=None,
    weight_vectors=None,
) -> SymbolChain:
    """Finite segment representation of the geodesic limit at theta.

    Default: one continued-fraction period after the preperiod; segment n runs
    from g_n^{-1}(0) to g_n^{-1}(infinity), scaled by 1/(m * lambda(theta)).

    With ``hyperbolic`` set to an integer matrix fixing theta (hyperbolic, and
    a member of ``spec`` when one is given), the single segment from 0 to its
    image under the matrix is used instead, scaled by 1/log of the dominant
    eigenvalue.
    """
    if hyperbolic is not None:
        x, y, z, w = _flatten2(hyperbolic)
        if x * w - y * z != 1:
            raise NotSL2(f"det {x * w - y * z} != 1")
        tr = x + w
        if abs(tr) <= 2:
            raise NotHyperbolic(f"|trace| = {abs(tr)} <= 2")
        moved = (theta * x + y) / (theta * z + w)
        if (moved - theta).sign() != 0:
            raise DomainError("matrix does not fix the surd")
        if spec is not None and not member((x, y, z, w), spec):
            raise DomainError("matrix is not a member of the requested group")
        with mp.workdps(60):
            log_lam = float(
                mp.log((abs(tr) + mp.sqrt(mp.mpf(tr) ** 2 - 4)) / 2)
            )
        segments = ((Cusp(0, 1), _mobius_int((x, y, z, w), Cusp(0, 1))),)
        return SymbolChain(
            segments=segments, scale=1.0 / log_lam, weight_vectors=weight_vectors
        )
    cf = cf_expand(theta)
    m = len(cf.period)
    lam = lyapunov(theta)
    segments = []
    for n in range(len(cf.preperiod) + 1, len(cf.preperiod) + m + 1):
        _, _, g = convergents(cf, n)
        (p_prev, p_cur), (q_prev, q_cur) = g
        # inverse of g_n up to sign: [[q_cur, -p_cur], [-q_prev, p_prev]]
        frm = Cusp(-p_cur, p_prev)
        to = Cusp(q_cur, -q_prev)
        segments.append((frm, to))
    return SymbolChain(
        segments=tuple(segments),
        scale=1.0 / (m * lam),
        weight_vectors=weight_vectors,
    )


# ---------------------------------------------------------------------------
# adaptive Gauss-Kronrod quadrature (vector integrands)
# ---------------------------------------------------------------------------

_XGK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691, 0.741531185599394,
    0.864864423359769, 0.949107912342759, 0.991455371120813,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])


@dataclass(frozen=True)
class QuadratureControl:
    """Relative tolerance and evaluation cap for one geodesic segment."""

    rel_tol: float = 1e-8
    max_evals: int = 1_000_000

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0):
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_evals < 15:
            raise DomainError(f"max_evals must be at least 15, got {self.max_evals}")


@dataclass(frozen=True)
class IntegralResult:
    """A complex integral value with its error estimate and evaluation count."""

    value: complex
    error: float
    evaluations: int


def _gk15_vec(f, a: float, b: float):
    center, half = 0.5 * (a + b), 0.5 * (b - a)
    vals = np.array([f(center + half * x) for x in _XGK])
    k15 = half * np.tensordot(_WGK, vals, axes=(0, 0))
    g7 = half * np.tensordot(_WG, vals[1::2], axes=(0, 0))
    return k15, float(np.max(np.abs(k15 - g7))), 15


def _adaptive_vec(f, a: float, b: float, quad: QuadratureControl):
    total, err0, n = _gk15_vec(f, a, b)
    heap = [(-err0, 0, a, b, total, err0)]
    tot_err = err0
    count = n
    seq = 1
    while heap:
        scale = float(np.max(np.abs(total))) + 1e-300
        if tot_err <= quad.rel_tol * scale:
            return total, tot_err, count
        if count >= quad.max_evals:
            raise QuadratureFailure(
                f"error {tot_err:.3e} still above {quad.rel_tol:.1e} x {scale:.3e} "
                f"after {count} evaluations"
            )
        neg_err, _, aa, bb, val, er = heapq.heappop(heap)
        mid = 0.5 * (aa + bb)
        left, le, n1 = _gk15_vec(f, aa, mid)
        right, re, n2 = _gk15_vec(f, mid, bb)
        total = total - val + left + right
        tot_err = tot_err - er + le + re
        count += n1 + n2
        heapq.heappush(heap, (-le, seq, aa, mid, left, le))
        heapq.heappush(heap, (-re, seq + 1, mid, bb, right, re))
        seq += 2
    return total, tot_err, count


# ---------------------------------------------------------------------------
# exact transformation chains for theta constants near the real axis
# ---------------------------------------------------------------------------


def _sl2_word(a: int, b: int, c: int, d: int) -> list[tuple]:
    """Decompose an SL2(Z) matrix into T^q / S steps (left factor first)."""
    steps: list[tuple] = []
    while c != 0:
        q = round(a / c)
        steps.append(("T", q))
        a, b = a - q * c, b - q * d
        steps.append(("S",))
        a, b, c, d = c, d, -a, -b
    if a == 1:
        steps.append(("T", b))
    else:
        steps.append(("N",))
        steps.append(("T", -b))
    return steps


def _theta_series_fast(r: float, s: float, tau: complex) -> complex:
    """Vectorized double-precision theta constant; tau safely high."""
    nmax = int(math.sqrt(40.0 / (math.pi * tau.imag))) + 4
    n0 = -round(r)
    n = np.arange(n0 - nmax, n0 + nmax + 1, dtype=float)
    frac = n + r
    return complex(np.sum(np.exp(1j * math.pi * (frac * frac * tau + 2.0 * frac * s))))


def _theta_series_mp(r: Fraction, s: Fraction, tau) -> mp.mpc:
    """Centred theta constant at the ambient mpmath precision."""
    digits = mp.mp.dps + 3
    im = mp.im(tau)
    nmax = int(mp.sqrt(digits * mp.log(10) / (mp.pi * im))) + 4
    rm = mp.mpf(r.numerator) / r.denominator
    sm = mp.mpf(s.numerator) / s.denominator
    n0 = -round(r)
    total = mp.mpc(0)
    for n in range(n0 - nmax, n0 + nmax + 1):
        frac = n + rm
        total += mp.expjpi(frac * frac * tau + 2 * frac * sm)
    return total


class _Chain:
    """theta[r, s](0, gamma w) as exact-phase multiples of theta at w itself.

    Characteristics and phases propagate through the word exactly (rational
    arithmetic); only the final series and the shared square-root factor are
    floating point.
    """

    def __init__(self, gamma: tuple[int, int, int, int], chars) -> None:
        self.steps = _sl2_word(*gamma)
        exact = []
        for r, s in chars:
            r, s = Fraction(r), Fraction(s)
            const = Fraction(0)
            for step in self.steps:
                if step[0] == "T":
                    q = step[1]
                    const += -q * r * (r + 1)
                    s = s + q * (r + Fraction(1, 2))
                elif step[0] == "S":
                    const += 2 * r * s - Fraction(1, 4)
                    r, s = s, -r
                else:  # total negation
                    r, s = -r, -s
            exact.append((const % 2, r, s))
        self.exact = exact
        self.compiled = [(unit_phase(c), float(r), float(s)) for c, r, s in exact]

    def root(self, w: complex) -> complex:
        """Product of sqrt factors collected by the S steps, evaluated at w."""
        points = []
        u = w
        for step in reversed(self.steps):
            points.append(u)
            if step[0] == "T":
                u = u + step[1]
            elif step[0] == "S":
                u = -1.0 / u
        root = complex(1.0)
        for step, point in zip(reversed(self.steps), points):
            if step[0] == "S":
                root *= cmath.sqrt(point)
        return root

    def eval_all(self, w: complex) -> np.ndarray:
        root = self.root(w)
        out = np.empty(len(self.compiled), dtype=complex)
        for idx, (mult, r, s) in enumerate(self.compiled):
            out[idx] = mult * root * _theta_series_fast(r, s, w)
        return out

    def eval_all_mp(self, w) -> list:
        """Arbitrary-precision evaluation at the ambient mpmath precision."""
        points = []
        u = mp.mpc(w)
        for step in reversed(self.steps):
            points.append(u)
            if step[0] == "T":
                u = u + step[1]
            elif step[0] == "S":
                u = -1 / u
        root = mp.mpc(1)
        for step, point in zip(reversed(self.steps), points):
            if step[0] == "S":
                root *= mp.sqrt(point)
        return [
            _unit_phase_mp(c) * root * _theta_series_mp(r, s, mp.mpc(w))
            for c, r, s in self.exact
        ]


def _cusp_matrix(cusp: Cusp) -> tuple[int, int, int, int]:
    """SL2(Z) matrix with first column (p, q); sends infinity to the cusp."""
    p, q = cusp.p, cusp.q
    if q == 0:
        return (1, 0, 0, 1)
    _, u, v = _egcd(p, q)  # u p + v q = 1
    return (p, -v, q, u)


class _PulledLevelPoint:
    """The level point l * A(sigma) split as gamma1 * w(sigma), w safely high.

    With A the cusp matrix, l*A(sigma) = gamma1 * ((delta*sigma + off) / eps)
    for an SL2(Z) matrix gamma1 and integers delta = gcd(l p, q),
    eps = l / delta; Im w = (delta^2 / l) Im sigma stays bounded away from the
    real axis along the whole pulled ray.
    """

    def __init__(self, level: int, cusp: Cusp) -> None:
        p, pt, q, qt = _cusp_matrix(cusp)
        lp, lpt = level * p, level * pt
        delta = math.gcd(lp, q)
        _, u, v = _egcd(lp, q)  # u*lp + v*q = delta
        gam = (u, v, -q // delta, lp // delta)
        if gam[0] * gam[3] - gam[1] * gam[2] != 1:
            raise DomainError("level-point splitting failed (determinant)")
        off = u * lpt + v * qt
        eps = level // delta
        g1 = (gam[3], -gam[1], -gam[2], gam[0])
        # verify gamma1 * [[delta, off], [0, eps]] == [[lp, lpt], [q, qt]]
        a1, b1, c1, d1 = g1
        if (a1 * delta, a1 * off + b1 * eps, c1 * delta, c1 * off + d1 * eps) != (
            lp,
            lpt,
            q,
            qt,
        ):
            raise DomainError("level-point splitting failed (reassembly)")
        self.gamma1 = g1
        self.delta = delta
        self.off = off
        self.eps = eps

    def w(self, sigma: complex) -> complex:
        return (self.delta * sigma + self.off) / self.eps


# ---------------------------------------------------------------------------
# integrand handles
# ---------------------------------------------------------------------------


class ThetaProductHandle:
    """Product of theta constants theta[r_i](0, l tau) at the level point."""

    def __init__(self, level: int, chars) -> None:
        if not isinstance(level, int) or level < 1:
            raise DomainError(f"level must be a positive integer, got {level!r}")
        self.level = level
        self.chars = tuple(Fraction(r) for r in chars)
        if not self.chars:
            raise DomainError("need at least one characteristic")
        self._cache: dict[Cusp, tuple[_PulledLevelPoint, _Chain]] = {}

    def _pulled(self, cusp: Cusp):
        hit = self._cache.get(cusp)
        if hit is None:
            split = _PulledLevelPoint(self.level, cusp)
            chain = _Chain(split.gamma1, [(r, Fraction(0)) for r in self.chars])
            hit = (split, chain)
            self._cache[cusp] = hit
        return hit

    def pulled_value(self, cusp: Cusp, sigma: complex) -> complex:
        """f(A(sigma)) for the cusp's matrix A, via the exact chain."""
        split, chain = self._pulled(cusp)
        return complex(np.prod(chain.eval_all(split.w(sigma))))

    def value(self, tau: complex) -> complex:
        """Direct evaluation at a point of comfortable height."""
        return self.pulled_value(Cusp(1, 0), complex(tau))


class CoefficientHandle:
    """One modular-normalized presentation coefficient as a function of tau.

    The (mu, k) relation's coefficient on slot j is a Cramer determinant of
    the mu-th block over the pivot columns (with j swapped in, or the negated
    pivot minor when j is the free column itself), optionally multiplied by
    theta[0](0, l tau) when a+d is odd.
    """

    def __init__(
        self,
        rm: RMData,
        mu: int,
        pivots: tuple[int, ...],
        free_col: int,
        slot: int,
        patch_theta0: bool | None = None,
    ) -> None:
        t, c = rm.trace, rm.degree
        pivots = tuple(int(x) for x in pivots)
        if len(pivots) != t or sorted(pivots) != list(pivots):
            raise DomainError(f"pivots must be {t} increasing columns, got {pivots}")
        if free_col in pivots:
            raise DomainError(f"free column {free_col} collides with pivots")
        if slot != free_col and slot not in pivots:
            raise DomainError(f"slot {slot} outside the support of this relation")
        self.rm = rm
        self.mu = mu
        self.pivots = pivots
        self.free_col = free_col
        self.slot = slot
        if patch_theta0 is None:
            patch_theta0 = rm.trace % 2 == 1
        self.patch_theta0 = patch_theta0
        self._chars = _block_chars(rm, mu)
        self._cache: dict[Cusp, tuple[_PulledLevelPoint, _Chain]] = {}

    def _pulled(self, cusp: Cusp):
        hit = self._cache.get(cusp)
        if hit is None:
            split = _PulledLevelPoint(self.rm.level, cusp)
            chars = [(r, Fraction(0)) for row in self._chars for r in row]
            if self.patch_theta0:
                chars.append((Fraction(0), Fraction(0)))
            chain = _Chain(split.gamma1, chars)
            hit = (split, chain)
            self._cache[cusp] = hit
        return hit

    def pulled_value(self, cusp: Cusp, sigma: complex, dps: int | None = None):
        split, chain = self._pulled(cusp)
        t, c = self.rm.trace, self.rm.degree
        if dps is None:
            flat = chain.eval_all(split.w(sigma))
            block = flat[: t * c].reshape(t, c)
            value = _cramer_coefficient(block, self.pivots, self.free_col, self.slot)
            if self.patch_theta0:
                value *= flat[t * c]
            return value
        with mp.workdps(dps + 10):
            sig = mp.mpc(sigma)
            w = (split.delta * sig + split.off) / split.eps
            flat = chain.eval_all_mp(w)
            block = [flat[i * c : (i + 1) * c] for i in range(t)]
            value = _cramer_coefficient_mp(
                block, self.pivots, self.free_col, self.slot
            )
            if self.patch_theta0:
                value *= flat[t * c]
            return value

    def value(self, tau, dps: int | None = None):
        pt = tau if dps is not None else complex(tau)
        return self.pulled_value(Cusp(1, 0), pt, dps=dps)


def _block_chars(rm: RMData, mu: int):
    """Exact characteristics of the mu-th block, an (a+d) x c nested tuple."""
    t, c, l = rm.trace, rm.degree, rm.level
    base = Fraction(rm.d * mu, c) - Fraction(mu, l) + Fraction(1, t)
    rows = []
    for i in range(1, t + 1):
        row = []
        for j in range(1, c + 1):
            lam = (Fraction(-rm.d * j, c) - Fraction(i, t)) % 1
            row.append((base + lam) % 1)
        rows.append(tuple(row))
    return tuple(rows)


def _cramer_coefficient(block: np.ndarray, pivots, free_col: int, slot: int) -> complex:
    cols = [p - 1 for p in pivots]
    if slot == free_col:
        return -complex(np.linalg.det(block[:, cols]))
    replaced = list(cols)
    replaced[pivots.index(slot)] = free_col - 1
    return complex(np.linalg.det(block[:, replaced]))


def _cramer_coefficient_mp(block, pivots, free_col: int, slot: int):
    from .presentation import _det_lu

    cols = [p - 1 for p in pivots]
    if slot != free_col:
        cols = list(cols)
        cols[pivots.index(slot)] = free_col - 1
    rows = [[row[j] for j in cols] for row in block]
    det = _det_lu(rows, True)
    return -det if slot == free_col else det


def coefficient_handles(
    rm: RMData,
    mu: int,
    k: int,
    tau_ref: complex = 2j,
) -> dict[int, CoefficientHandle]:
    """Handles for every support slot of relation (mu, k), pivots chosen at tau_ref."""
    from .presentation import kernel_pivots

    pivots = kernel_pivots(rm, mu, tau_ref)
    free = [q for q in range(1, rm.degree + 1) if q not in pivots]
    if not (1 <= k <= len(free)):
        raise DomainError(f"k = {k} outside 1..{len(free)}")
    q = free[k - 1]
    support = sorted((*pivots, q))
    return {
        j: CoefficientHandle(rm, mu, pivots, q, j) for j in support
    }


def relation_values(
    rm: RMData,
    mu: int,
    k: int,
    tau,
    tau_ref: complex = 2j,
    dps: int | None = None,
) -> dict:
    """All support-slot coefficient values of relation (mu, k) at one point.

    One shared block evaluation per call, so this is the economical way to
    probe a whole relation (e.g. when checking the transformation law).
    """
    from .presentation import kernel_pivots

    pivots = kernel_pivots(rm, mu, tau_ref)
    free = [q for q in range(1, rm.degree + 1) if q not in pivots]
    if not (1 <= k <= len(free)):
        raise DomainError(f"k = {k} outside 1..{len(free)}")
    q = free[k - 1]
    support = sorted((*pivots, q))
    vector = _RelationVector(rm, mu, pivots, q, support)
    pt = tau if dps is not None else complex(tau)
    vals = vector.pulled_value(Cusp(1, 0), pt, dps=dps)
    return dict(zip(support, vals))


# ---------------------------------------------------------------------------
# cusp-type detection and geodesic integration
# ---------------------------------------------------------------------------

_DECAY_HEIGHTS = (5.0, 10.0, 20.0)


def is_cusp_numeric(f, cusps) -> bool:
    """Exponential-decay probe of the pulled-back handle at each cusp.

    Fits log |f(A(iT))| against T in {5, 10, 20} by least squares and requires
    a positive decay rate; exact zeros count as decayed.
    """
    for cusp in cusps:
        cusp = _as_cusp(cusp)
        mags = [abs(f.pulled_value(cusp, complex(0.0, T))) for T in _DECAY_HEIGHTS]
        if all(m == 0.0 for m in mags):
            continue
        logs = [math.log(m) if m > 0 else math.log(1e-300) for m in mags]
        t_mean = sum(_DECAY_HEIGHTS) / 3
        y_mean = sum(logs) / 3
        slope = sum(
            (t - t_mean) * (y - y_mean) for t, y in zip(_DECAY_HEIGHTS, logs)
        ) / sum((t - t_mean) ** 2 for t in _DECAY_HEIGHTS)
        if not (-slope > 0):
            return False
    return True


def _weight_factor(tau: complex, weights, as_sum: bool) -> complex:
    if weights is None:
        return complex(1.0)
    ns, ms = weights
    if as_sum:
        return complex(sum(n * tau + m for n, m in zip(ns, ms)))
    out = complex(1.0)
    for n, m in zip(ns, ms):
        out *= n * tau + m
    return out


class _Stack:
    """Several scalar handles bundled as one vector-valued handle."""

    def __init__(self, forms) -> None:
        self.forms = list(forms)

    def __len__(self) -> int:
        return len(self.forms)

    def pulled_value(self, cusp: Cusp, sigma: complex) -> np.ndarray:
        return np.array(
            [f.pulled_value(cusp, sigma) for f in self.forms], dtype=complex
        )


def _half_integral_vec(
    vector,
    size: int,
    cusp: Cusp,
    point: complex,
    quad: QuadratureControl,
    weights,
    weight_as_sum: bool,
):
    """Integrals from `point` to the cusp along the pulled vertical ray."""
    a, b, c, d = _cusp_matrix(cusp)
    sigma0 = (d * point - b) / (-c * point + a)
    x0, t0 = sigma0.real, sigma0.imag

    def integrand(u: float) -> np.ndarray:
        if u >= 1.0 - 1e-9:
            return np.zeros(size, dtype=complex)
        t = t0 + u / (1.0 - u)
        jac = 1.0 / (1.0 - u) ** 2
        sigma = complex(x0, t)
        dtau = 1.0 / (c * sigma + d) ** 2
        tau = None
        if weights is not None:
            tau = (a * sigma + b) / (c * sigma + d)
        factor = 1j * dtau * jac * _weight_factor(tau, weights, weight_as_sum)
        return vector.pulled_value(cusp, sigma) * factor

    return _adaptive_vec(integrand, 0.0, 1.0, quad)


def _geodesic_integral_vec(
    vector,
    size: int,
    cusp_from: Cusp,
    cusp_to: Cusp,
    quad: QuadratureControl,
    weights=None,
    weight_as_sum: bool = False,
):
    """Vector integral along the geodesic from cusp_from to cusp_to."""
    if cusp_from == cusp_to:
        return np.zeros(size, dtype=complex), 0.0, 0
    if cusp_from.is_infinity:
        apex = complex(cusp_to.value(), 1.0)
    elif cusp_to.is_infinity:
        apex = complex(cusp_from.value(), 1.0)
    else:
        x1, x2 = cusp_from.value(), cusp_to.value()
        apex = complex(0.5 * (x1 + x2), 0.5 * abs(x2 - x1))
    v1, e1, n1 = _half_integral_vec(
        vector, size, cusp_from, apex, quad, weights, weight_as_sum
    )
    v2, e2, n2 = _half_integral_vec(
        vector, size, cusp_to, apex, quad, weights, weight_as_sum
    )
    # int_from^to = int_from^apex + int_apex^to = -(int_apex^from) + int_apex^to
    return -v1 + v2, e1 + e2, n1 + n2


def integrate_geodesic(
    f,
    cusp_from,
    cusp_to,
    weights=None,
    quad: QuadratureControl | None = None,
    weight_as_sum: bool = False,
) -> IntegralResult:
    """Integral of f(tau) * P(tau) dtau along the geodesic between two cusps.

    P is the product (or, with ``weight_as_sum``, the sum) of the linear forms
    given by ``weights = (n_list, m_list)``; ``weights=None`` means P = 1.
    The path is split at its apex and each half is pulled to a vertical ray.
    Raises :class:`NotCuspType` when the integrand fails the exponential-decay
    probe at an endpoint, and :class:`QuadratureFailure` on budget exhaustion.
    """
    quad = quad or QuadratureControl()
    cusp_from, cusp_to = _as_cusp(cusp_from), _as_cusp(cusp_to)
    for cusp in (cusp_from, cusp_to):
        if not is_cusp_numeric(f, [cusp]):
            raise NotCuspType(
                f"integrand does not decay at cusp ({cusp.p}, {cusp.q})"
            )
    value, err, count = _geodesic_integral_vec(
        _Stack([f]), 1, cusp_from, cusp_to, quad, weights, weight_as_sum
    )
    return IntegralResult(value=complex(value[0]), error=float(err), evaluations=count)


# ---------------------------------------------------------------------------
# averaged relations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AveragedPresentation:
    """Presentation-shaped coefficients integrated over a limiting symbol."""

    rm: RMData
    group: GroupSpec
    scale: float
    relations: tuple[Relation, ...]
    quadrature_error: float


class _RelationVector:
    """All support coefficients of one (mu, k) relation as a vector form."""

    def __init__(self, rm: RMData, mu: int, pivots, free_col: int, slots) -> None:
        self.rm = rm
        self.mu = mu
        self.pivots = tuple(pivots)
        self.free_col = free_col
        self.slots = tuple(slots)
        self.patch_theta0 = rm.trace % 2 == 1
        self._chars = _block_chars(rm, mu)
        self._cache: dict[Cusp, tuple[_PulledLevelPoint, _Chain]] = {}

    def _pulled(self, cusp: Cusp):
        hit = self._cache.get(cusp)
        if hit is None:
            split = _PulledLevelPoint(self.rm.level, cusp)
            chars = [(r, Fraction(0)) for row in self._chars for r in row]
            if self.patch_theta0:
                chars.append((Fraction(0), Fraction(0)))
            chain = _Chain(split.gamma1, chars)
            hit = (split, chain)
            self._cache[cusp] = hit
        return hit

    def pulled_value(self, cusp: Cusp, sigma, dps: int | None = None):
        split, chain = self._pulled(cusp)
        t, c = self.rm.trace, self.rm.degree
        if dps is None:
            flat = chain.eval_all(split.w(sigma))
            block = flat[: t * c].reshape(t, c)
            values = np.array(
                [
                    _cramer_coefficient(block, self.pivots, self.free_col, j)
                    for j in self.slots
                ],
                dtype=complex,
            )
            if self.patch_theta0:
                values *= flat[t * c]
            return values
        with mp.workdps(dps + 10):
            sig = mp.mpc(sigma)
            w = (split.delta * sig + split.off) / split.eps
            flat = chain.eval_all_mp(w)
            block = [flat[i * c : (i + 1) * c] for i in range(t)]
            values = [
                _cramer_coefficient_mp(block, self.pivots, self.free_col, j)
                for j in self.slots
            ]
            if self.patch_theta0:
                values = [v * flat[t * c] for v in values]
            return values


#: Reference points at which identically-zero coefficient functions are detected.
_ZERO_PROBES = (2j, 0.31 + 1.7j)

#: Relative magnitude below which a probed coefficient counts as identically zero.
_ZERO_PROBE_REL = 1e-10


def averaged_relations(
    rm: RMData,
    spec: GroupSpec | None = None,
    quad: QuadratureControl | None = None,
    tau_ref: complex = 2j,
) -> AveragedPresentation:
    """Integrate every modular coefficient over the limiting symbol of the surd.

    Requires even level and even weight.  Pivot columns are selected once at
    ``tau_ref`` and held fixed, making the run deterministic; coefficient
    functions that vanish at the reference probes are identically zero by
    construction and are assigned 0 exactly (no quadrature).
    """
    from .presentation import kernel_pivots

    if rm.level % 2 != 0:
        raise OddLevel(f"level {rm.level} is odd")
    if rm.weight % 2 != 0:
        raise OddWeight(f"weight {rm.weight} is odd")
    if spec is None:
        spec = GroupSpec.bracket(rm.level * rm.level, rm.level)
    quad = quad or QuadratureControl()
    chain = limiting_symbol(rm.theta, spec)
    relations_out: list[Relation] = []
    worst_error = 0.0
    for mu in range(1, rm.degree + 1):
        pivots = kernel_pivots(rm, mu, tau_ref)
        free = [q for q in range(1, rm.degree + 1) if q not in pivots]
        for k, q in enumerate(free, start=1):
            support = sorted((*pivots, q))
            vector = _RelationVector(rm, mu, pivots, q, support)
            probes = np.array(
                [vector.pulled_value(Cusp(1, 0), p) for p in _ZERO_PROBES]
            )
            top = float(np.max(np.abs(probes)))
            live = [
                i
                for i in range(len(support))
                if float(np.max(np.abs(probes[:, i]))) > _ZERO_PROBE_REL * top
            ]
            live_vector = _RelationVector(
                rm, mu, pivots, q, [support[i] for i in live]
            )
            totals = np.zeros(len(live), dtype=complex)
            seg_err = 0.0
            for frm, to in chain.segments:
                vals, err, _ = _geodesic_integral_vec(
                    live_vector, len(live), frm, to, quad
                )
                totals += vals
                seg_err += err
            worst_error = max(worst_error, chain.scale * seg_err)
            terms = tuple(
                RelationTerm(
                    left=alpha(rm, mu, support[i]),
                    right=support[i],
                    coeff=complex(chain.scale * totals[pos]),
                )
                for pos, i in enumerate(live)
            )
            relations_out.append(Relation(mu=mu, k=k, terms=terms))
    return AveragedPresentation(
        rm=rm,
        group=spec,
        scale=chain.scale,
        relations=tuple(relations_out),
        quadrature_error=worst_error,
    )


def averaged_json(av: AveragedPresentation) -> dict:
    """Deterministic JSON-ready dict mirroring the presentation layout."""
    return {
        "g": list(av.rm.g),
        "normalization": "averaged",
        "l": av.rm.level,
        "w": av.rm.weight,
        "group": av.group.describe(),
        "scale": av.scale,
        "quadrature_error": av.quadrature_error,
        "relations": [
            {
                "mu": rel.mu,
                "k": rel.k,
                "terms": [
                    {
                        "left": t.left,
                        "right": t.right,
                        "coeff": {"re": t.coeff.real, "im": t.coeff.imag},
                    }
                    for t in rel.terms
                ],
            }
            for rel in av.relations
        ],
    }
