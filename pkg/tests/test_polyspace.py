import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetconj.poset import Permutation, act, build_index_set, chain_relation, order_relation
from jetconj.polyspace import (HomQuadMap, PinchedSequence, conj_diagonal, conj_matrix, decompose,
                               decomposition_bounds, exact_inverse, monomials, operator_norm,
                               operator_norm_bound_check, projector, substitution_matrix)

F = Fraction
# exact matrix of p -> L^-1 p(L z) for L = [[2, 1], [0, 3]], computed symbolically
CONJ_2_1_3 = [
    [2, 0, 0, F(-2, 3), 0, 0],
    [2, 3, 0, F(-2, 3), -1, 0],
    [F(1, 2), F(3, 2), F(9, 2), F(-1, 6), F(-1, 2), F(-3, 2)],
    [0, 0, 0, F(4, 3), 0, 0],
    [0, 0, 0, F(4, 3), 2, 0],
    [0, 0, 0, F(1, 3), 1, 3],
]


def rand_upper(d, rng, scale=1.0):
    a = np.triu(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    a[np.diag_indices(d)] = scale * rng.uniform(0.3, 1.5, d) * np.exp(2j * np.pi * rng.uniform(size=d))
    return a


def test_conj_matrix_matches_symbolic():
    a = conj_matrix(np.array([[2, 1], [0, 3]], dtype=complex))
    expected = np.array([[float(x) for x in row] for row in CONJ_2_1_3])
    assert np.max(np.abs(a - expected)) < 1e-14


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_conj_matrix_acts_as_conjugation(seed, d):
    rng = np.random.default_rng(seed)
    lin = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) + 2 * np.eye(d)
    p = HomQuadMap(d, rng.normal(size=d * d * (d + 1) // 2) + 0j)
    q = HomQuadMap(d, conj_matrix(lin) @ p.coeffs)
    z = rng.normal(size=(4, d)) + 1j * rng.normal(size=(4, d))
    direct = np.linalg.solve(lin, p(z @ lin.T).T).T
    assert np.allclose(q(z), direct, atol=1e-9 * max(1.0, np.max(np.abs(direct))))


def test_diagonal_example():
    lam = np.array([0.3 + 0.1j, -0.7])
    a = conj_matrix(np.diag(lam))
    iset = build_index_set(2, 2)
    k = iset.index(iset.elements[1])  # z1 z2 e1
    assert abs(a[k, k] - lam[1]) < 1e-15
    assert np.allclose(a, np.diag(conj_diagonal(lam)))


def test_identity_and_permutation():
    assert np.array_equal(conj_matrix(np.eye(3, dtype=complex)), np.eye(18))
    iset = build_index_set(2, 2)
    sigma = Permutation((2, 1))
    a = conj_matrix(exact_inverse(sigma.matrix()))
    assert set(np.unique(a)) <= {0, 1}
    for t, s in enumerate(iset.elements):
        assert a[iset.index(act(sigma, s)), t] == 1


@pytest.mark.parametrize("d", [2, 3])
def test_upper_triangular_structure(d):
    rng = np.random.default_rng(d)
    iset = build_index_set(d, 2)
    outside = ~order_relation(iset).matrix
    alphas = iset.alpha_array
    for _ in range(20):
        lin = rand_upper(d, rng)
        a = conj_matrix(lin)
        assert not a[outside].any()
        lam = np.diag(lin)
        expected = [np.prod(lam ** alphas[k]) / lam[s.i - 1] for k, s in enumerate(iset.elements)]
        assert np.allclose(np.diag(a), expected, rtol=1e-12, atol=0)
        q = projector(d)
        assert np.allclose(q @ a, q @ a @ q, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_contravariance(seed, d):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d)) + 2 * np.eye(d)
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) + 2 * np.eye(d)
    lhs = conj_matrix(a @ b)
    rhs = conj_matrix(b) @ conj_matrix(a)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


def test_singular_rejected():
    with pytest.raises(ValueError):
        conj_matrix(np.zeros((2, 2)))


def test_substitution_of_identity():
    assert np.array_equal(substitution_matrix(np.eye(3)), np.eye(6))


def test_projector_values():
    assert np.diag(projector(2)).tolist() == [1, 1, 0, 1, 1, 1]
    q = projector(3)
    assert np.array_equal(q @ q, q) and int(q.trace()) == 14


def test_hom_quad_map_ops():
    p = HomQuadMap(2, np.arange(6) + 0j)
    z = np.array([1.0, 2.0])
    mon = monomials(z)
    assert np.allclose(mon, [1, 2, 4])
    assert np.allclose(p(z), [0 * 1 + 1 * 2 + 2 * 4, 3 * 1 + 4 * 2 + 5 * 4])
    assert (p - p).norm() == 0 and p.scale(2).norm() == 10
    lin = np.array([[1.0, 2.0], [0.0, 1.0]])
    assert np.allclose(p.precompose(lin)(z), p(lin @ z))
    assert np.allclose(p.postcompose(lin)(z), lin @ p(z))


def test_pinched_sequence_reproducible_and_valid():
    s1 = PinchedSequence(2, 0.5, 4.0, seed=7)
    s2 = PinchedSequence(2, 0.5, 4.0, seed=7)
    assert np.array_equal(s1.matrix(13), s2.matrix(13))
    rep = PinchedSequence(3, 0.5, 4.0, seed=1).verify(50)
    assert rep.ok and rep.c_measured <= 10
    m = s1.matrix(3)
    assert np.allclose(m, np.triu(m))
    assert np.all(np.abs(np.diag(m)) <= 0.5 * 0.95 + 1e-15)


@pytest.mark.parametrize("kw", [dict(lam=1.2, M=4.0), dict(lam=0.5, M=1.5), dict(lam=0.5, M=2.01, mu=0.05)])
def test_pinched_sequence_rejects(kw):
    with pytest.raises(ValueError):
        PinchedSequence(2, **kw)


def test_split_at_zero_keeps_resonant_diagonal():
    # the only diagonal pair of the chain relation is (s, s) for s in V minus T
    for d, n_diag in [(2, 1), (3, 5)]:
        sp = decompose(np.eye(len(build_index_set(d, 2)), dtype=complex), d, 0)
        assert np.array_equal(sp.m0 + sp.m1, projector(d))
        assert int(np.count_nonzero(sp.m1)) == n_diag
        assert np.count_nonzero(np.diag(chain_relation(d).matrix.astype(int))) == n_diag


def test_split_d1():
    seq = PinchedSequence(1, 0.5, 4.0)
    b = decomposition_bounds(seq, 5)
    assert all(v == 0 for v in b.norm1)


def test_split_supports():
    seq = PinchedSequence(3, 0.5, 4.0, seed=2)
    a = conj_matrix(seq.product(6))
    sp = decompose(a, 3, 6)
    w = chain_relation(3).matrix
    q = projector(3)
    assert not sp.m0[w].any() and not sp.m1[~w].any()
    assert np.allclose(sp.m0 + sp.m1, q @ a @ q)


def test_decomposition_slopes_critical_d2():
    seq = PinchedSequence(2, 0.5, 4.0, seed=1)
    b = decomposition_bounds(seq, 40)
    assert b.slope0 <= math.log(0.5) + 0.05
    assert b.slope1 <= 0.05


def test_scalar_sequence_norm_closed_form():
    seq = PinchedSequence(2, 0.5, 4.0, profile="scalar")
    for n in (0, 1, 7):
        assert abs(operator_norm(conj_matrix(seq.product(n))) - 0.5 ** n) < 1e-15


def test_operator_norm_bound():
    seq = PinchedSequence(2, 0.5, 4.0, seed=3)
    for n in (0, 5, 30):
        assert operator_norm_bound_check(seq, n).ok
