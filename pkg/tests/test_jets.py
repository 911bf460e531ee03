import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetconj.jets import (Jet2, PermSchedule, SolverConfig, SolverError, diagonal_scalar_oracle, growth_check,
                          growth_exponent, positive_qr, series_blocks, series_operator, solve_2jet,
                          triangularize)
from jetconj.pipeline import JetSequence
from jetconj.polyspace import HomQuadMap, PinchedSequence


def rand_jet(d, rng, lin_scale=1.0):
    lin = lin_scale * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) + 3 * np.eye(d)
    n = d * d * (d + 1) // 2
    return Jet2(lin, HomQuadMap(d, rng.normal(size=n) + 1j * rng.normal(size=n)))


def jet_close(a, b, tol=1e-10):
    return (a - b).norm() <= tol * max(1.0, a.norm(), b.norm())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_jet_compose_matches_pointwise(seed, d):
    rng = np.random.default_rng(seed)
    f, g = rand_jet(d, rng), rand_jet(d, rng)
    z = 1e-3 * (rng.normal(size=d) + 1j * rng.normal(size=d))
    # the remainder is third order in |z|: shrinking z by 10 shrinks it by about 1000
    err = [np.linalg.norm((f @ g)(t * z) - f(g(t * z))) for t in (1.0, 0.1)]
    assert err[1] <= err[0] / 500 + 1e-18


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_jet_inverse_and_conjugate(seed, d):
    rng = np.random.default_rng(seed)
    f = rand_jet(d, rng)
    ident = Jet2.identity(d)
    assert jet_close(f @ f.inverse(), ident)
    assert jet_close(f.inverse() @ f, ident)
    u = np.linalg.qr(rng.normal(size=(d, d)))[0]
    c = f.conjugate(u)
    assert jet_close(c, Jet2.linear_map(u) @ f @ Jet2.linear_map(np.linalg.inv(u)))


def test_positive_qr():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    q, r = positive_qr(a)
    assert np.allclose(q @ r, a)
    assert np.all(np.diag(r).real > 0) and np.allclose(np.diag(r).imag, 0)
    assert np.allclose(q.conj().T @ q, np.eye(3))


def test_triangularize_upper_input():
    mats = [np.triu(np.ones((2, 2))) * (k + 1) for k in range(5)]
    tri = triangularize(mats)
    assert all(np.allclose(v, np.eye(2)) for v in tri.V)
    assert all(np.allclose(lk, m) for lk, m in zip(tri.L, mats))


def test_triangularize_unitary_input():
    rng = np.random.default_rng(1)
    mats = [np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0] for _ in range(6)]
    tri = triangularize(mats)
    assert all(np.allclose(lk, np.eye(3)) for lk in tri.L)
    for n, a in enumerate(mats):
        assert np.allclose(tri.V[n + 1], a @ tri.V[n])


def test_triangularize_residuals():
    rng = np.random.default_rng(2)
    mats = [rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(50)]
    fac, un = triangularize(mats).residuals(mats)
    assert fac <= 1e-12 and un <= 1e-12


def test_triangularize_rejects_singular():
    with pytest.raises(ValueError):
        triangularize([np.zeros((2, 2))])


def test_schedule_firings():
    s3 = PermSchedule(3)
    assert [n for n in range(70) if s3.firing_epoch(n) is not None] == [0, 3, 15, 63]
    assert [s3.firing_epoch(n) for n in (0, 3, 15, 63)] == [0, 1, 2, 3]
    assert s3.tau(0).is_identity()
    assert s3.tau(4) == s3.theta(3) @ s3.theta(0)
    off = PermSchedule(3, enabled=False)
    assert all(off.theta(n).is_identity() for n in range(20))
    assert PermSchedule(1).firing_epoch(0) is None


def test_series_scalar_closed_form():
    lam = 0.4
    seq = [np.array([[lam]], dtype=complex)] * 300
    res = series_operator(series_blocks(seq, PermSchedule(1)), 0, tol=1e-14)
    assert res.converged and res.geometric_tail
    assert abs(res.S[0, 0] - 1 / (1 - lam)) < 1e-12
    ratios = [b / a for a, b in zip(res.term_norms, res.term_norms[1:])]
    assert max(ratios) <= lam + 1e-12


def test_series_empty_product():
    blocks = series_blocks(PinchedSequence(2, 0.5, 3.9).matrices(10), PermSchedule(2))
    res = series_operator(blocks, n=10)
    assert np.array_equal(res.S, np.eye(6)) and res.terms == 1


def test_series_classical_case_converges():
    seq = PinchedSequence(2, 0.5, 3.9, seed=4)
    blocks = series_blocks(seq.matrices(400), PermSchedule(2, enabled=False))
    res = series_operator(blocks, 0, max_terms=400)
    assert res.converged and not res.diverged


def positive_diagonal(a):
    a = a.copy()
    a[np.diag_indices(len(a))] = np.abs(np.diag(a))
    return a


def test_linear_triangular_input_is_fixed():
    seq = PinchedSequence(2, 0.5, 3.9, seed=0)
    f = [Jet2.linear_map(positive_diagonal(seq.matrix(n))) for n in range(80)]
    out = solve_2jet(f, SolverConfig(horizon=40, use_schedule=False))
    assert out.max_residual <= 1e-14  # QR round-off only
    for n in range(40):
        assert np.allclose(out.g[n].linear, f[n].linear, atol=1e-15) and out.g[n].quad.norm() == 0
        assert np.allclose(out.h[n].linear, np.eye(2)) and out.h[n].quad.norm() == 0


def test_triangular_quadratic_input_is_fixed():
    # quadratic part supported on the triangular index z2^2 e1
    seq = PinchedSequence(2, 0.5, 3.9, seed=1)
    q = HomQuadMap(2, np.array([0, 0, 1.5 - 0.5j, 0, 0, 0]))
    f = [Jet2(positive_diagonal(seq.matrix(n)), q) for n in range(80)]
    out = solve_2jet(f, SolverConfig(horizon=40, use_schedule=False))
    assert out.max_residual <= 1e-12
    assert max(h.quad.norm() for h in out.h) <= 1e-12
    assert all(jet_close(out.g[n], f[n], 1e-12) for n in range(40))


def test_d1_closed_form():
    lam, c = 0.4, 0.7 + 0.2j
    f = [Jet2(np.array([[lam]], dtype=complex), HomQuadMap(1, np.array([c]))) for _ in range(200)]
    out = solve_2jet(f, SolverConfig(horizon=50))
    assert abs(out.u[0].coeffs[0] - c / (lam * (1 - lam))) < 1e-12
    assert out.max_residual < 1e-14


def test_matches_scalar_oracle_diagonal():
    rng = np.random.default_rng(3)
    N, d = 120, 2
    lams = rng.uniform(1.05 / 4.5, 0.45 * 0.95, size=(N, d))
    quads = [rng.normal(size=6) + 1j * rng.normal(size=6) for _ in range(N)]
    f = [Jet2(np.diag(lams[n]).astype(complex), HomQuadMap(d, quads[n])) for n in range(N)]
    out = solve_2jet(f, SolverConfig(horizon=50))
    ref = diagonal_scalar_oracle(lams, quads, PermSchedule(d), out.n_end)
    for n in range(51):
        assert np.max(np.abs(out.h[n].quad.coeffs - ref[n])) <= 1e-9


def test_only_resonant_coefficient_is_carried():
    # forcing only at (2,0;2): in V but not T
    N = 200
    lams = np.tile([0.4, 0.3], (N, 1))
    q = np.zeros(6, dtype=complex)
    q[3] = 1.0
    f = [Jet2(np.diag(lams[n]).astype(complex), HomQuadMap(2, q)) for n in range(N)]
    out = solve_2jet(f, SolverConfig(horizon=50))
    ref = diagonal_scalar_oracle(lams, [q] * N, PermSchedule(2), out.n_end)
    assert max(np.max(np.abs(out.h[n].quad.coeffs - ref[n])) for n in range(51)) <= 1e-9
    assert out.max_residual <= 1e-12


@pytest.mark.parametrize("d,M,seed", [(2, 3.9, 0), (2, 4.3, 5), (3, 3.99, 1)])
def test_general_instances(d, M, seed):
    f = JetSequence(d, 0.5, M, seed)
    out = solve_2jet(f, SolverConfig(horizon=50))
    scale = max(f(n).norm() for n in range(50))
    assert out.max_residual <= 1e-8 * scale
    assert out.triangular_leak() == 0.0
    assert out.unitarity_defect() <= 1e-10


def test_restart_from_own_value_is_consistent():
    f = JetSequence(2, 0.5, 3.9, 0)
    out = solve_2jet(f, SolverConfig(horizon=30))
    again = solve_2jet(f, SolverConfig(horizon=30), restart=(20, out.u[20].coeffs))
    assert max(np.max(np.abs(a.quad.coeffs - b.quad.coeffs)) for a, b in zip(out.h[:21], again.h)) == 0.0


def test_errors():
    f = JetSequence(2, 0.5, 6.0, 0, mu=0.0, profile="extremal")
    with pytest.raises(SolverError, match="divergence"):
        solve_2jet(f, SolverConfig(horizon=30, use_schedule=False))
    with pytest.raises(SolverError, match="pinching"):
        solve_2jet(f, SolverConfig(horizon=30, M=2.0))
    with pytest.raises(SolverError, match="need at least"):
        solve_2jet([f(0)] * 5, SolverConfig(horizon=10))
    ok = solve_2jet(f, SolverConfig(horizon=30))
    assert ok.max_residual < 1e-10


def test_growth_exponent_and_linear_input():
    assert growth_exponent(2) == 7
    seq = PinchedSequence(2, 0.5, 3.9)
    f = [Jet2.linear_map(positive_diagonal(seq.matrix(n))) for n in range(120)]
    out = solve_2jet(f, SolverConfig(horizon=60, use_schedule=False))
    rep = growth_check(out, 1.05 * 0.25 * 3.9)
    assert abs(rep.slope) < 1e-12 and rep.ok


def test_growth_bound_near_critical():
    lam, M = 0.5, 4.1
    f = JetSequence(2, lam, M, 2, mu=0.0, profile="extremal")
    out = solve_2jet(f, SolverConfig(horizon=60))
    rep = growth_check(out, 1.05 * lam * lam * M)
    assert rep.bound == pytest.approx(7 * math.log(1.05 * lam * lam * M) + 0.1)
    assert rep.ok
