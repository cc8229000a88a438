"""Thin sparse/dense linear algebra layer.

All sparse operators in this package are carried as ``scipy.sparse.csr_matrix``
(row offsets / column indices / values).  This module pins down the handful of
operations the rest of the code relies on — matrix-vector products, the
Galerkin triple product, small dense eigenproblems, dense and sparse factor/
solve — together with their error behavior, so everything above it can stay
oblivious to the backing library.

Conventions:

* explicitly stored zeros survive construction (``from_coo``) — only
  ``drop_small`` prunes them — but matrix products may drop entries whose
  value cancels to an exact 0.0, so annihilation identities are always
  checked numerically, never structurally;
* dense eigen/factor routines operate on small local patches (tens of rows)
  and raise on violated preconditions instead of returning garbage.
"""
import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "from_coo",
    "spmv",
    "sptriple",
    "smallest_eigpair",
    "DenseFactor",
    "dense_factor_solve",
    "sparse_solve",
    "drop_small",
    "subspace_distance",
]


def from_coo(rows, cols, vals, shape):
    """Build a CSR matrix from triplets; duplicate entries are summed."""
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)


def spmv(A, x):
    """Sparse matrix-vector product A @ x with an explicit shape check."""
    x = np.asarray(x)
    if A.shape[1] != x.shape[0]:
        raise ValueError(
            f"spmv: dimension mismatch, A is {A.shape[0]}x{A.shape[1]} "
            f"but x has length {x.shape[0]}")
    return A @ x


def sptriple(R, A, P):
    """Galerkin triple product R @ A @ P, evaluated left to right.

    The result is CSR with sorted column indices.  Entries that cancel to
    an exact 0.0 may be pruned from the pattern.
    """
    if R.shape[1] != A.shape[0] or A.shape[1] != P.shape[0]:
        raise ValueError(
            f"sptriple: inner dimensions do not chain, "
            f"{R.shape} x {A.shape} x {P.shape}")
    out = (R.tocsr() @ A.tocsr()) @ P.tocsr()
    out = out.tocsr()
    out.sort_indices()
    return out


def smallest_eigpair(B, sym_tol=1e-10):
    """Smallest eigenpair of a small dense symmetric matrix.

    Checks symmetry up to ``sym_tol`` (relative to the largest entry), runs a
    full symmetric eigendecomposition, and returns ``(lam, v)`` for the
    smallest eigenvalue.  The eigenvector has unit 2-norm and a deterministic
    sign: its largest-magnitude entry (lowest index on ties) is positive.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"smallest_eigpair: expected a square matrix, got {B.shape}")
    scale = max(1.0, np.abs(B).max())
    asym = np.abs(B - B.T).max()
    if asym > sym_tol * scale:
        raise ValueError(
            f"smallest_eigpair: matrix is not symmetric "
            f"(max asymmetry {asym:.3e} vs allowed {sym_tol * scale:.3e})")
    try:
        w, V = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"smallest_eigpair: eigendecomposition failed: {exc}")
    v = V[:, 0]
    pivot = np.argmax(np.abs(v))
    if v[pivot] < 0:
        v = -v
    return w[0], v


class DenseFactor:
    """LU factorization of a small dense matrix, reusable for many solves.

    Raises ``ValueError`` naming the offending pivot index if the matrix is
    singular to working precision.
    """

    def __init__(self, B, pivot_tol=1e-14):
        B = np.asarray(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError(f"DenseFactor: expected a square matrix, got {B.shape}")
        self.n = B.shape[0]
        self.lu, self.piv = sla.lu_factor(B)
        scale = np.linalg.norm(B, "fro")
        diag = np.abs(np.diag(self.lu))
        bad = np.nonzero(diag <= pivot_tol * max(scale, 1e-300))[0]
        if bad.size:
            raise ValueError(
                f"DenseFactor: matrix is singular to working precision "
                f"(pivot {bad[0]} of {self.n})")

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise ValueError(
                f"DenseFactor.solve: rhs length {rhs.shape[0]} != n {self.n}")
        return sla.lu_solve((self.lu, self.piv), rhs)


def dense_factor_solve(B, rhs):
    """Factor B once and solve B x = rhs (columns of rhs solved together)."""
    return DenseFactor(B).solve(rhs)


def sparse_solve(A, b, rtol=1e-10):
    """Direct sparse solve A x = b via LU, with a residual check.

    One step of iterative refinement is attempted before declaring failure.
    """
    A = A.tocsc()
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"sparse_solve: matrix is not square: {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise ValueError(
            f"sparse_solve: rhs length {b.shape[0]} != n {A.shape[0]}")
    try:
        factor = spla.splu(A)
    except RuntimeError as exc:
        raise ValueError(f"sparse_solve: factorization failed: {exc}")
    x = factor.solve(b)
    normA = spla.norm(A)
    def resid(x):
        return np.linalg.norm(b - A @ x)
    bound = rtol * (normA * np.linalg.norm(x) + np.linalg.norm(b) + 1e-300)
    if resid(x) > bound:
        x = x + factor.solve(b - A @ x)
        bound = rtol * (normA * np.linalg.norm(x) + np.linalg.norm(b) + 1e-300)
        if resid(x) > bound:
            raise ValueError(
                f"sparse_solve: residual {resid(x):.3e} exceeds bound "
                f"{bound:.3e} after refinement (matrix near-singular?)")
    return x


def drop_small(A, threshold):
    """Drop entries with |a_ij| < threshold * max|a_ij|; returns CSR.

    threshold = 0 only prunes stored exact zeros.
    """
    A = A.tocoo()
    if A.nnz == 0:
        return A.tocsr()
    cut = threshold * np.abs(A.data).max()
    keep = np.abs(A.data) >= max(cut, np.finfo(float).tiny)
    out = sp.csr_matrix(
        (A.data[keep], (A.row[keep], A.col[keep])), shape=A.shape)
    out.sort_indices()
    return out


def subspace_distance(U, V):
    """sin of the largest principal angle between range(U) and range(V).

    Both arguments are dense n x k arrays with the same k; 0 means the ranges
    coincide, 1 means some direction of one is orthogonal to all of the other.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape != V.shape:
        raise ValueError(f"subspace_distance: shapes differ, {U.shape} vs {V.shape}")
    Qu, _ = np.linalg.qr(U)
    Qv, _ = np.linalg.qr(V)
    # sin(theta) as the norm of the projection residual: stable for tiny
    # angles, where sqrt(1 - cos^2) would bottom out at sqrt(eps)
    Rm = Qu - Qv @ (Qv.T @ Qu)
    s = np.linalg.svd(Rm, compute_uv=False)
    return float(min(1.0, s.max()))
