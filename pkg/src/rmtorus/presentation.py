"""Quadratic presentations of the graded coordinate ring.

For validated data ``rm`` and a point ``tau``, each label mu in {1..c}
contributes c - (a+d) quadratic relations whose coefficient vectors span the
kernel of the block matrix from :func:`rmtorus.core.block_M`.  The kernel
vectors are assembled by a Cramer-minor recipe over a pivot column set chosen
by rank-revealing elimination, so the construction stays valid at points where
the leading columns degenerate.

Four normalizations of the same ideal are provided:

* ``raw``       - determinant coefficients as computed;
* ``rational``  - every coefficient divided by theta[0](0, l tau)^(a+d),
                  real on the imaginary axis;
* ``modular``   - coefficients patched (odd trace only) by one extra theta
                  factor so each becomes a weight-w form for the level group;
* ``monic``     - monomial slots transposed, terms sorted decreasingly, each
                  relation divided by its leading coefficient (the input order
                  for Groebner completion).

All linear algebra runs in complex doubles by default and in mpmath arithmetic
when ``dps`` is supplied (or via ``RM_TORUS_PRECISION``); downstream Groebner
completion requires the high-precision path to keep spurious leading terms out.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .core import RMData, alpha, block_M
from .errors import (
    DegenerateProbe,
    DomainError,
    LeadingCoeffBelowThreshold,
    OddLevel,
    RankDeficient,
)
from .precision import working_dps
from .theta import SeriesControl, theta_constant

__all__ = [
    "RelationTerm",
    "Relation",
    "Presentation",
    "HilbertData",
    "minor_F",
    "kernel_pivots",
    "kernel_basis",
    "relations",
    "normalize_rational",
    "normalize_modular",
    "monic_ordered",
    "hilbert_coeffs",
    "presentation_json",
]

#: Coefficients below this fraction of a relation's largest one are dropped.
COEFF_PRUNE_REL = 1e-12

#: Column acceptance threshold (relative residual) for pivot selection.
PIVOT_RESIDUAL_REL = 1e-10


@dataclass(frozen=True)
class RelationTerm:
    """One monomial x_left * x_right with its complex coefficient."""

    left: int
    right: int
    coeff: complex


@dataclass(frozen=True)
class Relation:
    """The k-th kernel relation of the mu-th block."""

    mu: int
    k: int
    terms: tuple[RelationTerm, ...]


@dataclass(frozen=True)
class Presentation:
    """A full set of c(c-a-d) quadratic relations in one normalization."""

    rm: RMData
    tau: complex
    normalization: str
    relations: tuple[Relation, ...]

    @property
    def level(self) -> int:
        return self.rm.level

    @property
    def weight(self) -> int:
        return self.rm.weight


@dataclass(frozen=True)
class HilbertData:
    """Graded dimensions h_0..h_N."""

    coefficients: tuple[int, ...]


# ---------------------------------------------------------------------------
# scalar helpers shared by the double and mpmath paths
# ---------------------------------------------------------------------------


def _norm(vec, use_mp: bool):
    if use_mp:
        return mp.sqrt(mp.fsum(abs(x) ** 2 for x in vec))
    return math.sqrt(sum(abs(x) ** 2 for x in vec))


def _det_lu(rows, use_mp: bool):
    """Determinant by LU with partial pivoting; mutates a local copy."""
    n = len(rows)
    mat = [list(row) for row in rows]
    det = mp.mpc(1) if use_mp else complex(1.0)
    sign = 1
    for k in range(n):
        piv = max(range(k, n), key=lambda r: abs(mat[r][k]))
        if abs(mat[piv][k]) == 0:
            return mp.mpc(0) if use_mp else complex(0.0)
        if piv != k:
            mat[piv], mat[k] = mat[k], mat[piv]
            sign = -sign
        det *= mat[k][k]
        for r in range(k + 1, n):
            f = mat[r][k] / mat[k][k]
            for c2 in range(k + 1, n):
                mat[r][c2] -= f * mat[k][c2]
    return det * sign


def _det_permutation_sum(rows):
    """Sum over permutations; cross-check path for sizes up to 4."""
    n = len(rows)
    total = 0
    for perm in itertools.permutations(range(n)):
        inversions = sum(
            1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j]
        )
        prod = 1
        for i in range(n):
            prod = prod * rows[i][perm[i]]
        total += prod if inversions % 2 == 0 else -prod
    return total


def _block_columns(rm: RMData, mu: int, tau: complex, ctl, dps):
    """Block entries as a list of c column vectors of length a+d."""
    block = block_M(rm, mu, tau, ctl, dps)
    t, c = rm.trace, rm.degree
    return [[block.entries[i][j] for i in range(t)] for j in range(c)]


def _rank_revealing_pivots(columns, t: int, use_mp: bool) -> list[int]:
    """Greedy modified Gram-Schmidt scan; returns 0-based accepted columns."""
    basis = []
    pivots: list[int] = []
    for j, col in enumerate(columns):
        if len(pivots) == t:
            break
        v = list(col)
        orig = _norm(v, use_mp)
        if orig == 0:
            continue
        for q in basis:
            inner = sum(qc.conjugate() * vc for qc, vc in zip(q, v))
            v = [vc - inner * qc for qc, vc in zip(q, v)]
        resid = _norm(v, use_mp)
        if resid > PIVOT_RESIDUAL_REL * orig:
            pivots.append(j)
            basis.append([vc / resid for vc in v])
    return pivots


# ---------------------------------------------------------------------------
# public kernel machinery
# ---------------------------------------------------------------------------


def minor_F(
    rm: RMData,
    mu: int,
    cols: tuple[int, ...],
    tau: complex,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> complex:
    """Determinant of the selected (a+d) block columns (1-based, increasing).

    Computed by LU with partial pivoting; for a+d <= 4 the result is
    cross-checked against the explicit permutation sum.
    """
    t, c = rm.trace, rm.degree
    cols = tuple(int(x) for x in cols)
    if len(cols) != t:
        raise DomainError(f"need exactly {t} columns, got {len(cols)}")
    if any(not (1 <= x <= c) for x in cols):
        raise DomainError(f"columns must lie in 1..{c}, got {cols}")
    if any(cols[i] >= cols[i + 1] for i in range(t - 1)):
        raise DomainError(f"columns must be strictly increasing, got {cols}")
    if dps is None:
        dps = working_dps()
    columns = _block_columns(rm, mu, tau, ctl, dps)
    rows = [[columns[j - 1][i] for j in cols] for i in range(t)]
    det = _det_lu(rows, dps is not None)
    if t <= 4:
        direct = _det_permutation_sum(rows)
        scale = max(abs(det), abs(direct)) + 1.0
        if abs(det - direct) > 1e-8 * float(scale):
            raise DomainError(
                f"minor cross-check failed at mu={mu}, cols={cols}: "
                f"LU {det} vs permutation sum {direct}"
            )
    return det


def kernel_pivots(
    rm: RMData,
    mu: int,
    tau: complex,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> tuple[int, ...]:
    """1-based pivot columns (size a+d) selected by rank-revealing elimination."""
    if dps is None:
        dps = working_dps()
    columns = _block_columns(rm, mu, tau, ctl, dps)
    pivots = _rank_revealing_pivots(columns, rm.trace, dps is not None)
    if len(pivots) != rm.trace:
        raise RankDeficient(
            f"only {len(pivots)} independent columns found for mu={mu} at tau={tau}"
        )
    return tuple(p + 1 for p in pivots)


def _kernel_vectors(columns, pivots0: list[int], c: int, use_mp: bool):
    """Cramer-minor kernel vectors for each non-pivot column, 0-based pivots."""
    t = len(pivots0)
    zero = mp.mpc(0) if use_mp else complex(0.0)
    free = [q for q in range(c) if q not in pivots0]
    vectors = []
    for q in free:
        base = [columns[p] for p in pivots0]
        v = [zero] * c
        for slot, p in enumerate(pivots0):
            replaced = list(base)
            replaced[slot] = columns[q]
            rows = [[replaced[j][i] for j in range(t)] for i in range(t)]
            v[p] = _det_lu(rows, use_mp)
        rows = [[base[j][i] for j in range(t)] for i in range(t)]
        v[q] = -_det_lu(rows, use_mp)
        vectors.append(v)
    return free, vectors


def _verify_kernel(columns, vectors, use_mp: bool) -> None:
    t = len(columns[0])
    m_norm = _norm([x for col in columns for x in col], use_mp)
    for v in vectors:
        v_norm = _norm(v, use_mp)
        if v_norm == 0:
            raise RankDeficient("kernel construction produced a zero vector")
        resid = [
            sum(columns[j][i] * v[j] for j in range(len(v))) for i in range(t)
        ]
        if float(_norm(resid, use_mp)) > 1e-9 * float(m_norm) * float(v_norm):
            raise RankDeficient(
                "kernel vector fails annihilation at the requested tolerance"
            )
    # Linear independence: Gram determinant of the normalized vectors.
    unit = [[x / _norm(v, use_mp) for x in v] for v in vectors]
    gram = [
        [sum(a.conjugate() * b for a, b in zip(u1, u2)) for u2 in unit]
        for u1 in unit
    ]
    det = _det_lu(gram, use_mp)
    if float(abs(det)) <= 1e-12:
        raise RankDeficient("kernel vectors are numerically dependent")


def kernel_basis(
    rm: RMData,
    mu: int,
    tau: complex,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> list[tuple[complex, ...]]:
    """c-(a+d) kernel vectors of the mu-th block, Cramer-minor construction.

    Vector k corresponds to the k-th non-pivot column q (ascending): entry q
    is minus the pivot minor, entry p_i is the minor with column q replacing
    p_i in place, all other entries zero.
    """
    if dps is None:
        dps = working_dps()
    use_mp = dps is not None
    columns = _block_columns(rm, mu, tau, ctl, dps)
    pivots0 = _rank_revealing_pivots(columns, rm.trace, use_mp)
    if len(pivots0) != rm.trace:
        raise RankDeficient(
            f"only {len(pivots0)} independent columns found for mu={mu} at tau={tau}"
        )
    _, vectors = _kernel_vectors(columns, pivots0, rm.degree, use_mp)
    _verify_kernel(columns, vectors, use_mp)
    return [tuple(v) for v in vectors]


# ---------------------------------------------------------------------------
# presentation assembly and normalizations
# ---------------------------------------------------------------------------


def _prune_terms(pairs):
    """Drop coefficients below COEFF_PRUNE_REL of the largest magnitude."""
    if not pairs:
        return []
    top = max(float(abs(coeff)) for _, coeff in pairs)
    if top == 0.0:
        return []
    return [(j, coeff) for j, coeff in pairs if float(abs(coeff)) >= COEFF_PRUNE_REL * top]


def relations(
    rm: RMData,
    tau: complex,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> Presentation:
    """The raw presentation: all mu, ascending free-column index k.

    Term j of relation (mu, k) carries the monomial x_{alpha(mu, j)} x_j.
    """
    if dps is None:
        dps = working_dps()
    tau_c = complex(tau)
    rels: list[Relation] = []
    for mu in range(1, rm.degree + 1):
        for k, vec in enumerate(kernel_basis(rm, mu, tau_c, ctl, dps), start=1):
            pairs = _prune_terms(
                [(j, coeff) for j, coeff in enumerate(vec, start=1) if abs(coeff) != 0]
            )
            terms = tuple(
                RelationTerm(left=alpha(rm, mu, j), right=j, coeff=coeff)
                for j, coeff in pairs
            )
            if not terms:
                raise RankDeficient(f"relation (mu={mu}, k={k}) vanished identically")
            rels.append(Relation(mu=mu, k=k, terms=terms))
    return Presentation(rm=rm, tau=tau_c, normalization="raw", relations=tuple(rels))


def _require_raw(p: Presentation, op: str) -> None:
    if p.normalization != "raw":
        raise DomainError(f"{op} expects a raw presentation, got {p.normalization!r}")


def _scaled(p: Presentation, factor, tag: str) -> Presentation:
    rels = tuple(
        Relation(
            mu=rel.mu,
            k=rel.k,
            terms=tuple(
                RelationTerm(t.left, t.right, t.coeff * factor) for t in rel.terms
            ),
        )
        for rel in p.relations
    )
    return Presentation(rm=p.rm, tau=p.tau, normalization=tag, relations=rels)


def normalize_rational(
    p: Presentation,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> Presentation:
    """Divide every coefficient by theta[0](0, l tau)^(a+d).

    The rescaled coefficients are values of level-group-invariant functions;
    on the imaginary axis they are real to working accuracy.
    """
    _require_raw(p, "normalize_rational")
    if dps is None:
        dps = working_dps()
    base = theta_constant(0, p.level * p.tau, ctl, dps)
    if float(abs(base)) < 1e-12:
        raise DegenerateProbe(f"|theta(0, l tau)| = {float(abs(base))} too small")
    return _scaled(p, base ** (-p.rm.trace), "rational")


def normalize_modular(
    p: Presentation,
    ctl: SeriesControl | None = None,
    dps: int | None = None,
) -> Presentation:
    """Patch coefficients into weight-w forms for the level group.

    Requires an even level l.  For even a+d the coefficients are unchanged;
    for odd a+d each is multiplied by theta[0](0, l tau) so every product of
    theta constants has even length.
    """
    _require_raw(p, "normalize_modular")
    if p.level % 2 != 0:
        raise OddLevel(f"level {p.level} is odd; no even-length patching exists")
    if p.rm.trace % 2 == 0:
        return _scaled(p, 1, "modular")
    if dps is None:
        dps = working_dps()
    factor = theta_constant(0, p.level * p.tau, ctl, dps)
    return _scaled(p, factor, "modular")


def monic_ordered(p: Presentation) -> Presentation:
    """Transpose monomial slots, sort terms decreasingly, scale leads to 1.

    Term j becomes the monomial x_j x_{alpha(mu, j)}; the leading term of
    relation (mu, k) is the degree-lexicographically largest surviving
    monomial, generically x_q x_{alpha(mu, q)} for the k-th non-pivot column
    q.  Accepts any normalization (the per-relation scale divides out).
    """
    rels: list[Relation] = []
    for rel in p.relations:
        swapped: list[tuple[tuple[int, int], complex]] = []
        for t in rel.terms:
            if p.normalization == "monic":
                word = (t.left, t.right)
            else:
                word = (t.right, t.left)
            swapped.append((word, t.coeff))
        top = max(float(abs(coeff)) for _, coeff in swapped)
        if top < 1e-250:
            raise LeadingCoeffBelowThreshold(
                f"relation (mu={rel.mu}, k={rel.k}) has no usable leading coefficient"
            )
        kept = [(w, cf) for w, cf in swapped if float(abs(cf)) >= COEFF_PRUNE_REL * top]
        kept.sort(key=lambda item: item[0], reverse=True)
        lead_coeff = kept[0][1]
        terms = [RelationTerm(w[0], w[1], cf / lead_coeff) for w, cf in kept]
        terms[0] = RelationTerm(terms[0].left, terms[0].right, complex(1.0))
        rels.append(Relation(mu=rel.mu, k=rel.k, terms=tuple(terms)))
    return Presentation(rm=p.rm, tau=p.tau, normalization="monic", relations=tuple(rels))


def hilbert_coeffs(rm: RMData, n: int) -> HilbertData:
    """Graded dimensions h_0..h_n.

    Taylor coefficients of (1 + (c-a-d) x + x^2) / (1 - (a+d) x + x^2); the
    bare two-term recurrence h_{k+1} = (a+d) h_k - h_{k-1} only holds once the
    numerator is exhausted, so the series division below is the general form.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n!r}")
    t, c = rm.trace, rm.degree
    numer = {0: 1, 1: c - t, 2: 1}
    coeffs: list[int] = []
    for k in range(n + 1):
        value = numer.get(k, 0)
        if k >= 1:
            value += t * coeffs[k - 1]
        if k >= 2:
            value -= coeffs[k - 2]
        coeffs.append(value)
    return HilbertData(coefficients=tuple(coeffs))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _complex_json(x) -> dict:
    x = complex(x)
    return {"re": x.real, "im": x.imag}


def presentation_json(p: Presentation) -> dict:
    """Deterministic JSON-ready dict (fixed field and term ordering)."""
    return {
        "g": list(p.rm.g),
        "tau": {"re": p.tau.real, "im": p.tau.imag},
        "normalization": p.normalization,
        "l": p.level,
        "w": p.weight,
        "relations": [
            {
                "mu": rel.mu,
                "k": rel.k,
                "terms": [
                    {
                        "left": t.left,
                        "right": t.right,
                        "coeff": _complex_json(t.coeff),
                    }
                    for t in rel.terms
                ],
            }
            for rel in p.relations
        ],
    }
