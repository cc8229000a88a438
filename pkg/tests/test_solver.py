"""Tests for the two-grid cycle, rate measurement, and Krylov drivers."""
import numpy as np
import pytest
import scipy.sparse as sp

from nkamg import smoothers, solver


def path_laplacian(n):
    main = 2.0 * np.ones(n)
    off = -np.ones(n - 1)
    return sp.csr_matrix(sp.diags([off, main, off], [-1, 0, 1]))


def periodic_laplacian(n):
    rows, cols, vals = [], [], []
    for i in range(n):
        rows += [i, i, i]
        cols += [i, (i + 1) % n, (i - 1) % n]
        vals += [2.0, -1.0, -1.0]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def pair_aggregation(n):
    """0/1 interpolation from n/2 aggregates of two consecutive points."""
    rows = np.arange(n)
    cols = rows // 2
    return sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, n // 2))


def test_random_rhs_reproduces_lcg_recurrence():
    # hand-rolled 64-bit LCG with Knuth's MMIX constants
    v = solver.random_rhs(3, 42)
    state = 42
    expect = []
    for _ in range(3):
        state = (6364136223846793005 * state + 1442695040888963407) % 2**64
        expect.append(((state >> 11) / 2.0**53) * 2.0 - 1.0)
    assert np.array_equal(v, expect)
    assert np.all(v >= -1.0) and np.all(v < 1.0)


def test_orthonormal_columns_basic_and_dependent():
    rng = np.random.default_rng(3)
    vs = [rng.standard_normal(7) for _ in range(3)]
    Q = solver.orthonormal_columns(vs)
    assert Q.shape == (7, 3)
    assert np.allclose(Q.T @ Q, np.eye(3), atol=1e-12)
    # original vectors lie in the span
    M = np.column_stack(vs)
    assert np.linalg.norm(M - Q @ (Q.T @ M)) < 1e-10
    # a dependent vector is dropped
    Q2 = solver.orthonormal_columns(vs + [vs[0] + vs[1]])
    assert Q2.shape == (7, 3)
    assert solver.orthonormal_columns([]).shape == (0, 0)


def test_measure_rate_on_known_contraction():
    # richardson on A = I with weight 1/2 halves the residual every step
    n = 4
    A = sp.identity(n, format="csr")
    b = np.ones(n)
    step = lambda x, rhs: x + 0.5 * (rhs - x)
    res = solver.measure_rate(step, A, b)
    assert res.converged and not res.diverged
    assert res.iterations == 20  # 2^-20 is the first power below 1e-6
    assert abs(res.rate - 0.5) < 1e-12
    assert res.residuals.shape == (res.iterations + 1,)
    ratios = res.residuals[1:] / res.residuals[:-1]
    assert np.allclose(ratios, 0.5, atol=1e-12)


def test_measure_rate_flags_divergence():
    n = 4
    A = sp.identity(n, format="csr")
    b = np.ones(n)
    step = lambda x, rhs: x - (rhs - x)  # doubles the residual
    res = solver.measure_rate(step, A, b)
    assert res.diverged and not res.converged
    assert res.iterations == 5  # five consecutive ratios above 1.5
    assert abs(res.rate - 2.0) < 1e-12


def test_measure_rate_zero_rhs_short_circuits():
    A = sp.identity(3, format="csr")
    res = solver.measure_rate(lambda x, rhs: x, A, np.zeros(3))
    assert res.converged and res.iterations == 0 and res.rate == 0.0


def test_cg_solves_spd_system():
    A = path_laplacian(20)
    b = solver.random_rhs(20, 5)
    x, res = solver.cg(A, b)
    assert res.converged
    assert np.linalg.norm(b - A @ x) <= 1e-8 * np.linalg.norm(b)
    assert res.iterations <= 20  # exact termination property of CG


def test_pcg_with_exact_inverse_converges_immediately():
    A = path_laplacian(12)
    Ad = A.toarray()
    b = solver.random_rhs(12, 6)
    x, res = solver.pcg(A, b, lambda r: np.linalg.solve(Ad, r))
    assert res.converged and res.iterations == 1
    assert np.linalg.norm(b - A @ x) <= 1e-8 * np.linalg.norm(b)


def test_coarse_correction_with_square_interpolation_is_exact():
    A = path_laplacian(8)
    P = sp.identity(8, format="csr")
    tg = solver.TwoGrid(A, P, smoothers.GaussSeidel(A))
    b = solver.random_rhs(8, 9)
    x = tg.coarse_correction(np.zeros(8), b)
    assert np.linalg.norm(b - A @ x) < 1e-10


def test_step_matches_dense_error_propagator():
    # step = coarse correction then smoothing: E = (I - B A)(I - P Ac^-1 P^T A)
    n = 8
    A = path_laplacian(n)
    P = pair_aggregation(n)
    sm = smoothers.GaussSeidel(A)
    tg = solver.TwoGrid(A, P, sm)
    Ad = A.toarray()
    Pd = P.toarray()
    Ac = Pd.T @ Ad @ Pd
    C = np.eye(n) - Pd @ np.linalg.solve(Ac, Pd.T @ Ad)
    E_s = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        E_s[:, i] = sm.apply(e, np.zeros(n))
    E = E_s @ C
    b = solver.random_rhs(n, 11)
    x0 = solver.random_rhs(n, 12)
    x_star = np.linalg.solve(Ad, b)
    assert np.allclose(tg.step(x0, b), x_star + E @ (x0 - x_star), atol=1e-11)


def test_sym_step_is_self_adjoint_in_energy():
    n = 8
    A = path_laplacian(n)
    tg = solver.TwoGrid(A, pair_aggregation(n), smoothers.GaussSeidel(A))
    Ad = A.toarray()
    E = np.empty((n, n))
    x_star = np.linalg.solve(Ad, np.zeros(n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        E[:, i] = tg.sym_step(e, np.zeros(n))
    assert np.abs(Ad @ E - E.T @ Ad).max() < 1e-10


def test_singular_coarse_solve_uses_bordered_factorization():
    # periodic problem with the constant kernel carried to the coarse level
    n = 8
    A = periodic_laplacian(n)
    P = pair_aggregation(n)
    tg = solver.TwoGrid(A, P, smoothers.GaussSeidel(A),
                        nullspace=[np.ones(n)])
    assert tg.coarse.aug == 1
    assert tg.coarse.pinv is None and tg.coarse.lu is not None
    b = tg.project(solver.random_rhs(n, 13))
    res = solver.measure_rate(tg.step, A, b)
    assert res.converged


def test_singular_coarse_solve_falls_back_to_pseudoinverse():
    n = 8
    A = periodic_laplacian(n)
    tg = solver.TwoGrid(A, pair_aggregation(n), smoothers.GaussSeidel(A))
    assert tg.coarse.pinv is not None and tg.coarse.lu is None
    # the minimum-norm solve still yields a working cycle on compatible data
    b = solver.random_rhs(n, 13)
    b = b - b.mean()
    res = solver.measure_rate(tg.step, A, b)
    assert res.converged


def test_project_removes_kernel_components():
    n = 8
    A = periodic_laplacian(n)
    tg = solver.TwoGrid(A, pair_aggregation(n), smoothers.GaussSeidel(A),
                        nullspace=[np.ones(n)])
    v = solver.random_rhs(n, 17)
    w = tg.project(v)
    assert abs(np.ones(n) @ w) < 1e-12
    assert np.allclose(tg.project(w), w, atol=1e-14)


def test_preconditioner_is_symmetric_positive_definite():
    n = 8
    A = path_laplacian(n)
    tg = solver.TwoGrid(A, pair_aggregation(n), smoothers.GaussSeidel(A))
    M = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        M[:, i] = tg.preconditioner(e)
    assert np.abs(M - M.T).max() < 1e-12
    assert np.linalg.eigvalsh(0.5 * (M + M.T)).min() > 0.0


def test_rate_result_repr_mentions_outcome():
    A = sp.identity(2, format="csr")
    ok = solver.measure_rate(lambda x, rhs: x + 0.5 * (rhs - x), A,
                             np.ones(2))
    assert "converged" in repr(ok)
    stuck = solver.measure_rate(lambda x, rhs: x, A, np.ones(2), max_iter=3)
    assert "maxiter" in repr(stuck)
