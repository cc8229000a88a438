"""Detection of local near-kernel vectors by patchwise eigenproblems.

The detection sweep visits every pair of DoFs at pattern-graph distance
exactly m, collects the geodesic corridor between them (all DoFs on paths of
length <= m), and solves the local eigenproblem of A restricted to the
corridor.  Corridors whose smallest local eigenvalue falls below the
threshold eps contribute their eigenvector as a candidate near-kernel
column; duplicates (same effective support) are removed and signs are
normalized.

For curl-curl operators with small mass coefficient beta this recovers the
discrete gradient of every node's scalar basis function: the corridor of two
collinear edges at distance m around a node is exactly that node's edge
star, the stiffness part of A vanishes on the star gradient, and the mass
part leaves an eigenvalue of order beta, well separated from the O(1/h^2)
spectrum above it.
"""
import numpy as np

from .sparsela import from_coo, smallest_eigpair

__all__ = [
    "pattern_adjacency",
    "bfs_within",
    "detect_near_kernel",
    "NearKernelBasis",
    "mass_threshold",
]


def pattern_adjacency(A):
    """Sorted off-diagonal neighbor lists from the nonzero pattern of A.

    Stored explicit zeros do not create edges.
    """
    A = A.tocsr()
    n = A.shape[0]
    adj = []
    for i in range(n):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        cols = A.indices[lo:hi]
        vals = A.data[lo:hi]
        nb = cols[(cols != i) & (vals != 0.0)]
        adj.append(np.sort(nb))
    return adj


def bfs_within(adj, src, m):
    """Distances from src for all vertices within graph distance m."""
    dist = {src: 0}
    frontier = [src]
    for d in range(1, m + 1):
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    return dist


class NearKernelBasis:
    """Deduplicated near-kernel candidates, one unit-norm column each.

    Attributes
    ----------
    N : csr_matrix, n x n_cand
        Candidate columns in detection order.
    lambdas : ndarray
        Smallest local eigenvalue that produced each column.
    supports : list of tuple
        Effective support (entries above the support tolerance) per column.
    corridors : list of tuple
        The corridor each column was detected on.
    """

    def __init__(self, n, columns, lambdas, supports, corridors):
        rows, cols, vals = [], [], []
        for c, (idx, v) in enumerate(columns):
            rows.extend(idx)
            cols.extend([c] * len(idx))
            vals.extend(v)
        self.N = from_coo(rows, cols, vals, (n, len(columns)))
        self.lambdas = np.asarray(lambdas)
        self.supports = supports
        self.corridors = corridors

    @property
    def n_columns(self):
        return self.N.shape[1]


def mass_threshold(mass, beta, factor=1.2):
    """Detection threshold from the mass-term scale: factor * beta * max diag.

    The smallest local eigenvalue of a node-star gradient is beta times a
    mean of mass diagonal entries — at most beta * max(diag), reached on the
    quadrilateral mesh — so factor 1.2 accepts every star gradient with a
    20% margin.  It stays below the periodic wrap (harmonic) modes at
    eigenvalue beta * (max diag + two couplings), which only enter corridors
    on degenerate tiny meshes, and far below the O(1/h^2) bulk.
    """
    return max(factor * beta * mass.diagonal().max(), 1e-12)


def detect_near_kernel(A, eps, m=2, support_tol=1e-10):
    """Run the corridor sweep on A; returns a NearKernelBasis.

    Parameters
    ----------
    A : csr_matrix (symmetric)
    eps : float
        Acceptance threshold for the smallest corridor eigenvalue.
    m : int
        Corridor diameter (pattern-graph distance between endpoint pairs).
    support_tol : float
        Entries below support_tol * max|v| are treated as zero when forming
        the effective support and are removed from the stored column.
    """
    A = A.tocsr()
    n = A.shape[0]
    adj = pattern_adjacency(A)
    dists = [bfs_within(adj, i, m) for i in range(n)]
    Ad = None  # densified lazily per corridor via fancy indexing

    seen_corridors = set()
    seen_supports = set()
    columns, lambdas, supports, corridors = [], [], [], []

    for i in range(n):
        far = sorted(j for j, d in dists[i].items() if d == m and j > i)
        for j in far:
            di, dj = dists[i], dists[j]
            corridor = tuple(sorted(
                x for x, d in di.items() if x in dj and d + dj[x] <= m))
            if corridor in seen_corridors:
                continue
            seen_corridors.add(corridor)
            idx = np.asarray(corridor)
            B = A[idx][:, idx].toarray()
            lam, v = smallest_eigpair(B)
            if lam > eps:
                continue
            keep = np.abs(v) > support_tol * np.abs(v).max()
            support = tuple(idx[keep])
            if support in seen_supports:
                continue
            seen_supports.add(support)
            v = v[keep]
            v = v / np.linalg.norm(v)
            pivot = np.argmax(np.abs(v))
            if v[pivot] < 0:
                v = -v
            columns.append((list(idx[keep]), list(v)))
            lambdas.append(lam)
            supports.append(support)
            corridors.append(corridor)

    return NearKernelBasis(n, columns, lambdas, supports, corridors)
