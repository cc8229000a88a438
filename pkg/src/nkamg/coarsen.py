"""C/F splitting, near-kernel pair matching, and interpolation operators.

The coarse space is built in two stages.  First the columns of the
near-kernel basis N are C/F-split on the nodal dual operator A_N = N^T A N by
the classical greedy first pass (`cf_split`).  Then `form_split_basis` turns
the split into an orthogonal decomposition of DoF space: every pair of coarse
columns at strength-distance two is joined through a mutual neighbor column
by a two-DoF path, producing one row of the restriction R per (pair,
neighbor); DoFs claimed by no path form the complement basis S.  By
construction R R^T = I, S^T S = I and R S = 0.

Interpolation operators:

* `ideal_interpolation`: P = (I - S (S^T A S)^{-1} S^T A) R^T, the
  energy-minimal extension of the coarse basis;
* `classical_ideal_interpolation`: P = [-A_FF^{-1} A_FC; I] for a plain C/F
  splitting (fine rows ordered as in A, columns by ascending coarse index);
* `geometric_split`: the lattice-aligned splitting basis on the periodic
  quadrilateral mesh (coarse edges along even rows/columns), used as an
  oracle for the matched basis;
* `geometric_interpolation`: the canonical coarse-to-fine embedding of
  nested edge-element spaces (re-exported from discretize).
"""
import heapq

import numpy as np

from .discretize import fe_prolongation as geometric_interpolation  # noqa: F401
from .sparsela import from_coo, sparse_solve, sptriple

__all__ = [
    "strength_neighbors",
    "cf_split",
    "SplitBasis",
    "form_split_basis",
    "ideal_interpolation",
    "classical_ideal_interpolation",
    "direct_interpolation",
    "geometric_split",
    "operator_complexity",
    "geometric_interpolation",
]

_SQRT2 = np.sqrt(2.0)


def strength_neighbors(A, theta=0.25, mode="negative"):
    """Symmetrized strong-coupling neighbor lists of A.

    With mode="negative" (classical), j is strongly coupled to i when
    -a_ij >= theta * max_k(-a_ik), negative couplings only.  With mode="abs"
    the same test runs on |a_ij|; this is the right notion for nodal dual
    operators built from sign-normalized near-kernel columns, whose entry
    signs are gauge artifacts of the per-column orientation.  The relation is
    symmetrized by union.  Returns a list of sorted index arrays.
    """
    if mode not in ("negative", "abs"):
        raise ValueError(f"unknown strength mode {mode!r}")
    A = A.tocsr()
    n = A.shape[0]
    strong = [set() for _ in range(n)]
    for i in range(n):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        cols = A.indices[lo:hi]
        vals = A.data[lo:hi]
        off = cols != i
        cols, vals = cols[off], vals[off]
        mag = np.abs(vals) if mode == "abs" else -vals
        if mag.size == 0 or mag.max() <= 0.0:
            continue
        cut = theta * mag.max()
        for j in cols[mag >= cut]:
            strong[i].add(int(j))
            strong[int(j)].add(i)
    return [np.array(sorted(s), dtype=np.int64) for s in strong]


def cf_split(A, theta=0.25, mode="negative"):
    """Greedy first-pass C/F splitting on the strength graph of A.

    The measure of an undecided point is (#strong undecided neighbors)
    + 2 * (#strong F neighbors), updated dynamically; the highest measure is
    picked next (lowest index on ties), becomes C, and its undecided strong
    neighbors become F.  Returns a boolean is_coarse array.
    """
    S = strength_neighbors(A, theta, mode)
    n = A.shape[0]
    UND, CPT, FPT = 0, 1, 2
    state = np.full(n, UND, dtype=np.int8)
    lam = np.array([len(s) for s in S], dtype=np.int64)
    heap = [(-lam[i], i) for i in range(n)]
    heapq.heapify(heap)
    while heap:
        mlam, i = heapq.heappop(heap)
        if state[i] != UND or -mlam != lam[i]:
            continue
        state[i] = CPT
        for j in S[i]:
            if state[j] != UND:
                continue
            state[j] = FPT
            for k in S[j]:
                if state[k] == UND:
                    lam[k] += 1
                    heapq.heappush(heap, (-lam[k], int(k)))
    return state == CPT


class SplitBasis:
    """Orthogonal splitting of DoF space from matched near-kernel pairs.

    Attributes
    ----------
    R : csr_matrix, n_rows x n
        Coarse restriction; each row is a +-1/sqrt(2) two-DoF path.
    S : csr_matrix, n x n_s
        Complement selection basis over the unclaimed DoFs.
    claimed : bool ndarray
        DoFs appearing in some row of R.
    row_meta : list of (i, j, k) or None
        For matched bases, the coarse pair and mutual neighbor of each row.
    skipped_pairs : list of (i, j)
        Distance-two coarse pairs for which no DoF path could be claimed.
    """

    def __init__(self, R, S, claimed, row_meta=None, skipped_pairs=()):
        self.R = R
        self.S = S
        self.claimed = claimed
        self.row_meta = row_meta
        self.skipped_pairs = list(skipped_pairs)

    @property
    def n_rows(self):
        return self.R.shape[0]

    @property
    def n_s(self):
        return self.S.shape[1]


def _selection_basis(n, unclaimed_idx):
    cols = np.arange(len(unclaimed_idx))
    return from_coo(unclaimed_idx, cols, np.ones(len(unclaimed_idx)),
                    (n, len(unclaimed_idx)))


def form_split_basis(A_N, N, is_coarse, theta=0.25, mode="negative",
                     dof_adjacency=None, tiny=1e-12):
    """Match coarse column pairs of the nodal dual into R rows; build S.

    For every unordered pair (i, j) of coarse columns at distance exactly two
    in the strength graph of A_N, and every mutual strong neighbor k
    (ascending), the lowest unclaimed DoF pair (DoF1, DoF2) with
    DoF1 in supp(N_i) ∩ supp(N_k) and DoF2 in supp(N_k) ∩ supp(N_j) is
    claimed as the row (s1 e_DoF1 + s2 e_DoF2)/sqrt(2), with signs read off
    column k: s1 = sign(N[DoF1,k]), s2 = -sign(N[DoF2,k]).  This orients the
    path "in through DoF1, out through DoF2", so for columns with
    equal-magnitude entries the row annihilates column k exactly.

    If ``dof_adjacency`` is given (a sparse matrix on DoFs), candidate pairs
    must be adjacent in its pattern.  Pairs with no claimable path end up in
    ``skipped_pairs``.
    """
    n_dof = N.shape[0]
    Nc = N.tocsc()
    n_cols = Nc.shape[1]
    support = []
    colval = []
    for c in range(n_cols):
        lo, hi = Nc.indptr[c], Nc.indptr[c + 1]
        idx = Nc.indices[lo:hi]
        val = Nc.data[lo:hi]
        nz = np.abs(val) > tiny
        support.append(set(int(x) for x in idx[nz]))
        colval.append({int(x): float(v) for x, v in zip(idx[nz], val[nz])})

    strong = strength_neighbors(A_N, theta, mode)
    strong_sets = [set(int(x) for x in s) for s in strong]
    coarse = [int(c) for c in np.nonzero(is_coarse)[0]]

    claimed = np.zeros(n_dof, dtype=bool)
    row_entries = []
    row_meta = []
    skipped = []
    adj_pairs = None
    if dof_adjacency is not None:
        Ad = dof_adjacency.tocoo()
        adj_pairs = {(min(int(r), int(c)), max(int(r), int(c)))
                     for r, c, v in zip(Ad.row, Ad.col, Ad.data)
                     if r != c and v != 0.0}

    for i in coarse:
        partners = {}
        for k in strong_sets[i]:
            for j in strong_sets[k]:
                if j > i and is_coarse[j] and j not in strong_sets[i]:
                    partners.setdefault(j, set()).add(k)
        for j in sorted(partners):
            made = False
            for k in sorted(partners[j]):
                cand1 = sorted(support[i] & support[k])
                cand2 = sorted(support[k] & support[j])
                found = None
                for d1 in cand1:
                    if claimed[d1] or abs(colval[k].get(d1, 0.0)) <= tiny:
                        continue
                    for d2 in cand2:
                        if d2 == d1 or claimed[d2]:
                            continue
                        if abs(colval[k].get(d2, 0.0)) <= tiny:
                            continue
                        if adj_pairs is not None and \
                                (min(d1, d2), max(d1, d2)) not in adj_pairs:
                            continue
                        found = (d1, d2)
                        break
                    if found:
                        break
                if found:
                    d1, d2 = found
                    s1 = 1.0 if colval[k][d1] > 0 else -1.0
                    s2 = -1.0 if colval[k][d2] > 0 else 1.0
                    row_entries.append((d1, s1 / _SQRT2, d2, s2 / _SQRT2))
                    row_meta.append((i, j, k))
                    claimed[d1] = claimed[d2] = True
                    made = True
            if not made:
                skipped.append((i, j))

    rows, cols, vals = [], [], []
    for r, (d1, v1, d2, v2) in enumerate(row_entries):
        rows += [r, r]
        cols += [d1, d2]
        vals += [v1, v2]
    R = from_coo(rows, cols, vals, (len(row_entries), n_dof))
    S = _selection_basis(n_dof, np.nonzero(~claimed)[0])
    return SplitBasis(R, S, claimed, row_meta, skipped)


def ideal_interpolation(A, R, S):
    """Ideal interpolation P = (I - S (S^T A S)^{-1} S^T A) R^T.

    The S-block of every coarse basis vector is replaced by its energy-
    minimal (harmonic) extension; S^T A P = 0 up to solver accuracy.
    """
    SAS = sptriple(S.T.tocsr(), A, S)
    W = sptriple(S.T.tocsr(), A, R.T.tocsr())
    X = sparse_solve(SAS.tocsc(), W.toarray())
    P = np.asarray(R.T.todense()) - S @ X
    return _dense_to_csr(P)


def classical_ideal_interpolation(A, is_coarse):
    """Classical ideal interpolation P = [-A_FF^{-1} A_FC; I].

    Rows follow the fine ordering of A; column c corresponds to the c-th
    coarse point in ascending index order.
    """
    A = A.tocsr()
    cidx = np.nonzero(is_coarse)[0]
    fidx = np.nonzero(~is_coarse)[0]
    P = np.zeros((A.shape[0], cidx.size))
    P[cidx, np.arange(cidx.size)] = 1.0
    if fidx.size:
        A_FF = A[fidx][:, fidx]
        A_FC = A[fidx][:, cidx]
        P[fidx] = -sparse_solve(A_FF.tocsc(), A_FC.toarray())
    return _dense_to_csr(P)


def direct_interpolation(A, is_coarse, theta=0.25, mode="negative"):
    """One-pass classical interpolation P with strictly local fine rows.

    Each fine row distributes its full off-diagonal weight over its strong
    coarse neighbors: w_ic = -alpha * a_ic / a_ii with
    alpha = sum of all off-diagonal a_ik over the strong coarse sum, so row
    sums of constants are preserved exactly.  Unlike the A_FF^{-1} form the
    rows have no fill beyond the strong coarse couplings, at the cost of
    energy optimality.
    """
    A = A.tocsr()
    strong = strength_neighbors(A, theta, mode)
    cidx = np.nonzero(is_coarse)[0]
    col_of = {int(c): k for k, c in enumerate(cidx)}
    rows, cols, vals = [], [], []
    for k, c in enumerate(cidx):
        rows.append(int(c))
        cols.append(k)
        vals.append(1.0)
    for i in np.nonzero(~np.asarray(is_coarse))[0]:
        lo, hi = A.indptr[i], A.indptr[i + 1]
        idx, dat = A.indices[lo:hi], A.data[lo:hi]
        diag = dat[idx == i].sum()
        off = idx != i
        total = dat[off].sum()
        strong_i = set(int(x) for x in strong[i])
        sc = [(int(j), float(v)) for j, v in zip(idx[off], dat[off])
              if is_coarse[j] and int(j) in strong_i]
        if not sc or diag == 0.0:
            raise ValueError(
                f"row {i} has no strong coarse coupling to distribute over")
        csum = sum(v for _, v in sc)
        alpha = total / csum
        for j, v in sc:
            rows.append(int(i))
            cols.append(col_of[j])
            vals.append(-alpha * v / diag)
    P = from_coo(rows, cols, vals, (A.shape[0], cidx.size))
    P.sort_indices()
    return P


def geometric_split(mesh):
    """Lattice-aligned splitting basis on the periodic quadrilateral mesh.

    Coarse rows pair the two fine edges along each edge of the half-density
    (even rows/columns) coarse lattice; every other edge goes to S.  Requires
    nx and ny even.
    """
    if mesh.kind != "quad_periodic":
        raise ValueError("geometric_split is defined on the periodic quad mesh")
    if mesh.nx % 2 or mesh.ny % 2:
        raise ValueError("geometric_split needs even nx and ny")
    rows, cols, vals = [], [], []
    r = 0
    claimed = np.zeros(mesh.n_edges, dtype=bool)
    for j in range(0, mesh.ny, 2):
        for i in range(0, mesh.nx, 2):
            for e in (mesh.hedge(i, j), mesh.hedge(i + 1, j)):
                rows.append(r)
                cols.append(e)
                vals.append(1.0 / _SQRT2)
                claimed[e] = True
            r += 1
    for j in range(0, mesh.ny, 2):
        for i in range(0, mesh.nx, 2):
            for e in (mesh.vedge(i, j), mesh.vedge(i, j + 1)):
                rows.append(r)
                cols.append(e)
                vals.append(1.0 / _SQRT2)
                claimed[e] = True
            r += 1
    R = from_coo(rows, cols, vals, (r, mesh.n_edges))
    S = _selection_basis(mesh.n_edges, np.nonzero(~claimed)[0])
    return SplitBasis(R, S, claimed)


def operator_complexity(A_fine, A_coarse):
    """(nnz fine + nnz coarse) / nnz fine.

    Entries smaller than 1e-13 times the largest magnitude of the matrix
    are not counted, so cancellation noise in triple products does not
    inflate the ratio.
    """
    nf = _nnz_dropped(A_fine)
    nc = _nnz_dropped(A_coarse)
    return (nf + nc) / nf


def _nnz_dropped(A, rel_tol=1e-13):
    B = A.copy().tocsr()
    B.eliminate_zeros()
    if B.nnz == 0:
        return 0
    cut = rel_tol * np.abs(B.data).max()
    return int(np.count_nonzero(np.abs(B.data) >= cut))


def _dense_to_csr(P):
    out = from_coo(*_dense_triplets(P), P.shape)
    out.sort_indices()
    return out


def _dense_triplets(P):
    rows, cols = np.nonzero(P)
    return rows, cols, P[rows, cols]
