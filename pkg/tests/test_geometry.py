import json
import random

import numpy as np
import pytest

from rmtorus.core import alpha
from rmtorus.errors import CombinatorialCap, DomainError
from rmtorus.geometry import (
    BiformRelation,
    graph_member,
    graph_point_search,
    minor_equations,
    minors_json,
    multilinearize,
    omega_matrix,
)
from rmtorus.presentation import monic_ordered, relations

TAU = 2j


def _dense_omega(matrix, u):
    dense = np.zeros((len(matrix.entries), matrix.n_vars), dtype=complex)
    for i, row in enumerate(matrix.entries):
        for j, (coeff, var) in enumerate(row):
            dense[i, j] = coeff * u[var - 1]
    return dense


def _planted_system(seed, n_vars=5, n_relations=4):
    rng = np.random.default_rng(seed)
    u_star = rng.standard_normal(n_vars) + 1j * rng.standard_normal(n_vars)
    v_star = rng.standard_normal(n_vars) + 1j * rng.standard_normal(n_vars)
    rels = []
    for idx in range(n_relations):
        coeffs = []
        total = 0.0
        for i in range(1, n_vars + 1):
            for j in range(1, n_vars + 1):
                value = complex(rng.standard_normal(), rng.standard_normal())
                coeffs.append([i, j, value])
                total += value * u_star[i - 1] * v_star[j - 1]
        coeffs[0][2] -= total / (u_star[0] * v_star[0])
        rels.append(BiformRelation(mu=idx + 1, k=1,
                                   coefficients=tuple((i, j, v) for i, j, v in coeffs)))
    return tuple(rels), tuple(u_star), tuple(v_star)


def test_multilinearize_structure(rm6):
    pres = relations(rm6, TAU)
    biforms = multilinearize(pres)
    assert len(biforms) == 12
    for biform, rel in zip(biforms, pres.relations):
        assert (biform.mu, biform.k) == (rel.mu, rel.k)
        for left, right, coeff in biform.coefficients:
            assert left == alpha(rm6, biform.mu, right)
        u = tuple(complex(i, -i) for i in range(1, 7))
        v = tuple(complex(2 * i, 1) for i in range(1, 7))
        direct = sum(coeff * u[left - 1] * v[right - 1]
                     for left, right, coeff in biform.coefficients)
        assert abs(biform.evaluate(u, v) - direct) <= 1e-12 * max(1.0, abs(direct))


def test_evaluate_is_bilinear(rm6):
    biform = multilinearize(relations(rm6, TAU))[0]
    rng = np.random.default_rng(5)
    u = tuple(rng.standard_normal(6) + 1j * rng.standard_normal(6))
    v = tuple(rng.standard_normal(6) + 1j * rng.standard_normal(6))
    base = biform.evaluate(u, v)
    scaled = biform.evaluate(tuple(2j * x for x in u), tuple(-3.0 * x for x in v))
    assert abs(scaled - (-6j) * base) <= 1e-12 * max(1.0, abs(base))


def test_monic_input_rejected(rm6):
    monic = monic_ordered(relations(rm6, TAU))
    with pytest.raises(DomainError):
        multilinearize(monic)


def test_omega_matrix_shape(rm5, rm6):
    for rm, rows, n_vars in ((rm5, 10, 5), (rm6, 12, 6)):
        matrix = omega_matrix(relations(rm, TAU))
        assert len(matrix.entries) == rows
        assert matrix.n_vars == n_vars
        assert len(matrix.labels) == rows
        assert matrix.labels == tuple(sorted(matrix.labels))
        for row in matrix.entries:
            assert len(row) == n_vars
            for coeff, var in row:
                assert 1 <= var <= n_vars


def test_minor_counts_and_homogeneity(rm5, rm6):
    for rm, count, c in ((rm5, 252, 5), (rm6, 924, 6)):
        matrix = omega_matrix(relations(rm, TAU))
        minors = minor_equations(matrix, cap=1000)
        assert len(minors) == count
        for minor in minors:
            assert len(minor.rows) == c
            assert minor.rows == tuple(sorted(minor.rows))
            for exps, _ in minor.monomials:
                assert len(exps) == matrix.n_vars
                assert sum(exps) == c


def test_minor_evaluation_matches_dense_determinant(rm5, rm6):
    rng = np.random.default_rng(11)
    for rm in (rm5, rm6):
        matrix = omega_matrix(relations(rm, TAU))
        minors = minor_equations(matrix, cap=1000)
        u = rng.standard_normal(matrix.n_vars) + 1j * rng.standard_normal(matrix.n_vars)
        dense = _dense_omega(matrix, u)
        for minor in minors[::17]:
            direct = np.linalg.det(dense[[r - 1 for r in minor.rows], :])
            assert abs(minor.evaluate(tuple(u)) - direct) <= 1e-9 * max(1e-12, abs(direct))


def test_combinatorial_cap(rm5):
    matrix = omega_matrix(relations(rm5, TAU))
    with pytest.raises(CombinatorialCap):
        minor_equations(matrix, cap=100)


def test_minors_json_deterministic(rm5):
    matrix = omega_matrix(relations(rm5, TAU))
    minors = minor_equations(matrix, cap=1000)
    assert json.dumps(minors_json(minors)) == json.dumps(minors_json(minors))


def test_planted_zero_is_found_and_certified():
    rels, u_star, v_star = _planted_system(seed=3)
    peak = max(abs(r.evaluate(u_star, v_star)) for r in rels)
    assert peak < 1e-12
    assert graph_member(rels, u_star, v_star)
    result = graph_point_search(rels, 5, seed=0, attempts=4, iterations=120)
    assert result.residual < 1e-10
    assert graph_member(rels, result.u, result.v)


def test_graph_member_scaling_invariance():
    rels, u_star, v_star = _planted_system(seed=9)
    rng = random.Random(1)
    for _ in range(5):
        a = complex(rng.uniform(0.1, 3), rng.uniform(-3, 3))
        b = complex(rng.uniform(0.1, 3), rng.uniform(-3, 3))
        assert graph_member(rels, tuple(a * x for x in u_star),
                            tuple(b * x for x in v_star))


def test_graph_member_guards():
    rels, u_star, v_star = _planted_system(seed=4)
    with pytest.raises(DomainError):
        graph_member(rels, (0,) * 5, v_star)
    with pytest.raises(DomainError):
        graph_member(rels, u_star, (0,) * 5)


def test_example_system_admits_no_graph_point(rm6):
    biforms = multilinearize(relations(rm6, TAU))
    result = graph_point_search(biforms, 6, seed=1, attempts=3, iterations=100)
    assert result.residual > 1e-4
    assert not graph_member(biforms, result.u, result.v)
    other = graph_point_search(biforms, 6, seed=7, attempts=2, iterations=80)
    assert other.residual > 1e-4
