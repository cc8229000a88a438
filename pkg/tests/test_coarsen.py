"""Tests for C/F splitting, splitting bases, and interpolation builders."""
import numpy as np
import pytest
import scipy.sparse as sp

from nkamg import coarsen, discretize, nearkernel, sparsela


def path_laplacian(n):
    """1D Dirichlet Laplacian: diag 2, off-diagonal -1."""
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


def quad_pipeline(nx, beta=0.01, m=2):
    mesh = discretize.quad_mesh_periodic(nx)
    op = discretize.curl_curl(mesh, beta)
    eps = nearkernel.mass_threshold(op.mass, op.beta)
    nk = nearkernel.detect_near_kernel(op.A, eps, m=m)
    A_N = sparsela.sptriple(nk.N.T.tocsr(), op.A, nk.N)
    cf = coarsen.cf_split(A_N, mode="abs")
    sb = coarsen.form_split_basis(A_N, nk.N, cf, mode="abs")
    return mesh, op, nk, A_N, cf, sb


def test_strength_neighbors_modes():
    # from node 0: -4 is strong, -0.5 weak (from both sides), +4 positive
    A = sp.csr_matrix(np.array([
        [8.0, -4.0, -0.5, 4.0],
        [-4.0, 8.0, 0.0, 0.0],
        [-0.5, 0.0, 8.0, -8.0],
        [4.0, 0.0, -8.0, 8.0]]))
    neg = coarsen.strength_neighbors(A, theta=0.25)
    assert list(neg[0]) == [1]          # positive +4 never counts here
    assert list(neg[2]) == [3]
    ab = coarsen.strength_neighbors(A, theta=0.25, mode="abs")
    assert list(ab[0]) == [1, 3]        # |+4| counts in magnitude mode
    # symmetrized by union: 3 sees 0 because 0 sees 3
    assert list(ab[3]) == [0, 2]


def test_cf_split_path_graph():
    # greedy measure (undecided + 2*F) with lowest-index ties picks the
    # alternating split C = {1, 3} on the 5-point path
    A = path_laplacian(5)
    cf = coarsen.cf_split(A)
    assert list(np.nonzero(cf)[0]) == [1, 3]
    # every F point has a strong C neighbor
    adj = coarsen.strength_neighbors(A)
    for i in np.nonzero(~cf)[0]:
        assert any(cf[j] for j in adj[i])


def test_cf_split_deterministic():
    A = periodic_laplacian(12)
    cf1 = coarsen.cf_split(A)
    cf2 = coarsen.cf_split(A)
    assert np.array_equal(cf1, cf2)
    assert 0 < cf1.sum() < 12


def test_split_basis_quad_anchor():
    # 4x4 periodic quad: 16 near-kernel columns, 4 coarse, 8 matched rows
    # (two wrap corridors per axis pair), the 2 diagonal pairs skipped
    _, _, nk, A_N, cf, sb = quad_pipeline(4)
    assert int(cf.sum()) == 4
    assert sb.R.shape == (8, 32)
    assert sb.S.shape == (32, 16)
    assert sb.n_rows == 8
    assert sb.n_s == 16
    assert len(sb.skipped_pairs) == 2
    assert int(sb.claimed.sum()) == 16


def test_split_basis_row_structure():
    _, _, nk, A_N, cf, sb = quad_pipeline(4)
    R = sb.R.toarray()
    for r in range(R.shape[0]):
        support = np.nonzero(R[r])[0]
        assert support.size == 2
        assert np.allclose(np.abs(R[r, support]), 1.0 / np.sqrt(2.0))
    # orthonormal rows, disjoint from S
    assert np.allclose(R @ R.T, np.eye(R.shape[0]), atol=1e-14)
    assert np.abs(R @ sb.S.toarray()).max() == 0.0
    # claimed DoFs and S columns partition the edge set
    s_dofs = np.nonzero(np.abs(sb.S.toarray()).sum(axis=1))[0]
    assert not (set(np.nonzero(sb.claimed)[0]) & set(s_dofs))
    assert sb.claimed.sum() + len(s_dofs) == 32


def test_split_basis_telescoping():
    # each matched row annihilates the shared middle column k exactly
    _, _, nk, A_N, cf, sb = quad_pipeline(4)
    RN = (sb.R @ nk.N).toarray()
    for r, (i, j, k) in enumerate(sb.row_meta):
        assert abs(RN[r, k]) < 1e-14


def test_ideal_interpolation_matches_dense_formula():
    for seed in range(5):
        rng = np.random.default_rng(400 + seed)
        n, nc = 20, 6
        B = rng.standard_normal((n, n))
        A = sp.csr_matrix(B @ B.T + n * np.eye(n))
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        R = sp.csr_matrix(Q[:, :nc].T)
        S = sp.csr_matrix(Q[:, nc:])
        P = coarsen.ideal_interpolation(A, R, S)
        Ad, Sd, Rd = A.toarray(), S.toarray(), R.toarray()
        expect = (np.eye(n) - Sd @ np.linalg.solve(Sd.T @ Ad @ Sd, Sd.T @ Ad)) \
            @ Rd.T
        assert np.abs(P.toarray() - expect).max() < 1e-9
        # defining identities
        assert np.abs(Rd @ P.toarray() - np.eye(nc)).max() < 1e-10
        assert np.abs(Sd.T @ Ad @ P.toarray()).max() < 1e-8


def test_classical_ideal_matches_dense_schur():
    for seed in range(5):
        rng = np.random.default_rng(500 + seed)
        n = 16
        B = rng.standard_normal((n, n))
        A = sp.csr_matrix(B @ B.T + n * np.eye(n))
        cf = np.zeros(n, dtype=bool)
        cf[rng.permutation(n)[:6]] = True
        P = coarsen.classical_ideal_interpolation(A, cf)
        Ad = A.toarray()
        F, C = np.nonzero(~cf)[0], np.nonzero(cf)[0]
        expect = np.zeros((n, C.size))
        expect[C, np.arange(C.size)] = 1.0
        expect[np.ix_(F, np.arange(C.size))] = \
            -np.linalg.solve(Ad[np.ix_(F, F)], Ad[np.ix_(F, C)])
        assert np.abs(P.toarray() - expect).max() < 1e-9


def test_direct_interpolation_preserves_constants():
    # zero-row-sum M-matrix: each fine row distributes its full off-diagonal
    # weight, so P maps the coarse constant to the fine constant
    A = periodic_laplacian(8)
    cf = np.zeros(8, dtype=bool)
    cf[::2] = True
    P = coarsen.direct_interpolation(A, cf)
    assert P.shape == (8, 4)
    ones = np.ones(4)
    assert np.allclose(P @ ones, np.ones(8), atol=1e-14)
    # coarse rows are identity rows
    Pd = P.toarray()
    for c, i in enumerate(np.nonzero(cf)[0]):
        row = np.zeros(4)
        row[c] = 1.0
        assert np.array_equal(Pd[i], row)


def test_geometric_split_anchors():
    m4 = discretize.quad_mesh_periodic(4)
    gb4 = coarsen.geometric_split(m4)
    assert gb4.R.shape == (8, 32)
    assert gb4.S.shape == (32, 16)
    m2 = discretize.quad_mesh_periodic(2)
    gb2 = coarsen.geometric_split(m2)
    assert gb2.R.shape == (2, 8)
    assert gb2.S.shape == (8, 4)
    R = gb4.R.toarray()
    assert np.allclose(R @ R.T, np.eye(8), atol=1e-14)
    assert np.abs(R @ gb4.S.toarray()).max() == 0.0


def test_geometric_interpolation_is_the_nested_embedding():
    assert coarsen.geometric_interpolation is discretize.fe_prolongation


def test_operator_complexity():
    A = sp.csr_matrix(np.eye(4))
    Ac = sp.csr_matrix(np.eye(2))
    assert coarsen.operator_complexity(A, Ac) == pytest.approx(1.5)
    # entries below 1e-13 of the max are not counted
    Ac2 = sp.csr_matrix(np.array([[1.0, 1e-16], [0.0, 1.0]]))
    assert coarsen.operator_complexity(A, Ac2) == pytest.approx(1.5)
