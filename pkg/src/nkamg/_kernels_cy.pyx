# cython: language_level=3
"""Compiled sweep kernels (see _kernels_py for the reference semantics)."""
import numpy as np

cimport numpy as cnp


def gauss_seidel(int[::1] indptr, int[::1] indices, double[::1] data,
                 double[::1] x, double[::1] b,
                 Py_ssize_t row_start, Py_ssize_t row_stop, Py_ssize_t row_step):
    cdef Py_ssize_t i, jj, j
    cdef double diag, acc
    for i in range(row_start, row_stop, row_step):
        diag = 0.0
        acc = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j == i:
                diag = data[jj]
            else:
                acc += data[jj] * x[j]
        if diag != 0.0:
            x[i] = (b[i] - acc) / diag


def schwarz_sweep(int[::1] indptr, int[::1] indices, double[::1] data,
                  double[::1] x, double[::1] b,
                  long[:, ::1] dofs, double[:, :, ::1] inv, long[::1] order):
    cdef Py_ssize_t n_patches = dofs.shape[0]
    cdef Py_ssize_t k = dofs.shape[1]
    cdef Py_ssize_t q, p, t, s, jj, i
    cdef double acc
    r_arr = np.empty(k)
    upd_arr = np.empty(k)
    cdef double[::1] r = r_arr
    cdef double[::1] upd = upd_arr
    for q in range(order.shape[0]):
        p = order[q]
        for t in range(k):
            i = dofs[p, t]
            acc = 0.0
            for jj in range(indptr[i], indptr[i + 1]):
                acc += data[jj] * x[indices[jj]]
            r[t] = b[i] - acc
        for t in range(k):
            acc = 0.0
            for s in range(k):
                acc += inv[p, t, s] * r[s]
            upd[t] = acc
        for t in range(k):
            x[dofs[p, t]] += upd[t]
