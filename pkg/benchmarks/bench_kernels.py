"""Timing comparison of the compiled sweep kernels vs the Python fallback.

Runs the two hot kernels (Gauss-Seidel rows, multiplicative Schwarz patches)
on representative operators and prints the per-sweep time of each backend.

    python3 benchmarks/bench_kernels.py [n]

where ``n`` is the mesh size (default 32).
"""
import sys
import time

import numpy as np

from nkamg import _kernels_py, discretize, smoothers, solver, stokes

try:
    from nkamg import _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeats=20):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_gauss_seidel(n):
    mesh = discretize.quad_mesh_periodic(n)
    op = discretize.curl_curl(mesh, 0.01)
    A = op.A.tocsr()
    indptr = A.indptr.astype(np.int32)
    indices = A.indices.astype(np.int32)
    b = solver.random_rhs(A.shape[0], 1)
    x = solver.random_rhs(A.shape[0], 2)
    rows = A.shape[0]

    def run(impl):
        y = x.copy()
        impl.gauss_seidel(indptr, indices, A.data, y, b, 0, rows, 1)
        return y

    t_py = timeit(lambda: run(_kernels_py))
    t_cy = timeit(lambda: run(_kernels_cy)) if _kernels_cy else None
    return A.shape[0], t_py, t_cy


def bench_schwarz(n):
    st = discretize.stokes_mac(n)
    sm = smoothers.Schwarz(st.A, stokes.vanka_patches(st))
    b = solver.random_rhs(st.A.shape[0], 3)
    x = solver.random_rhs(st.A.shape[0], 4)
    A = st.A.tocsr()
    indptr = A.indptr.astype(np.int32)
    indices = A.indices.astype(np.int32)
    def run(impl):
        y = x.copy()
        impl.schwarz_sweep(indptr, indices, A.data, y, b, sm.dofs, sm.inv,
                           sm.order)
        return y

    t_py = timeit(lambda: run(_kernels_py))
    t_cy = timeit(lambda: run(_kernels_cy)) if _kernels_cy else None
    return st.A.shape[0], t_py, t_cy


def report(name, size, t_py, t_cy):
    line = f"{name:<24} n={size:<6} python {t_py * 1e3:8.3f} ms"
    if t_cy is not None:
        line += f"   compiled {t_cy * 1e3:8.3f} ms   speedup {t_py / t_cy:5.1f}x"
    else:
        line += "   compiled backend not built"
    print(line)


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 32
    report("gauss_seidel sweep", *bench_gauss_seidel(n))
    report("schwarz (vanka) sweep", *bench_schwarz(n))


if __name__ == "__main__":
    main()
