"""Pure-Python reference implementations of the hot sweep kernels.

Same contracts as the compiled versions in ``_kernels_cy``; see ``_kernels``
for how one of the two is selected at import time.  CSR index arrays must be
int32 and data/vectors float64; all updates are in place.
"""
import numpy as np


def gauss_seidel(indptr, indices, data, x, b, row_start, row_stop, row_step):
    """One Gauss-Seidel sweep over rows [row_start:row_stop:row_step] of CSR A.

    Rows with a zero (or missing) diagonal are skipped.
    """
    for i in range(row_start, row_stop, row_step):
        start, end = indptr[i], indptr[i + 1]
        diag = 0.0
        acc = 0.0
        for jj in range(start, end):
            j = indices[jj]
            if j == i:
                diag = data[jj]
            else:
                acc += data[jj] * x[j]
        if diag != 0.0:
            x[i] = (b[i] - acc) / diag


def schwarz_sweep(indptr, indices, data, x, b, dofs, inv, order):
    """Multiplicative Schwarz sweep over dense-inverted patches.

    ``dofs`` is (n_patches, k) with the DoF indices of each patch, ``inv`` is
    (n_patches, k, k) with precomputed local inverses, and ``order`` gives the
    patch visiting order.  Each patch solve uses the residual of the current
    (already updated) iterate.
    """
    n_patches, k = dofs.shape
    r = np.empty(k)
    for p in order:
        d = dofs[p]
        for t in range(k):
            i = d[t]
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += data[jj] * x[indices[jj]]
            r[t] = b[i] - acc
        x[d] += inv[p] @ r
