"""Parity tests between the compiled sweep kernels and the Python fallback."""
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from nkamg import _kernels, _kernels_py

try:
    from nkamg import _kernels_cy
except ImportError:
    _kernels_cy = None

needs_compiled = pytest.mark.skipif(
    _kernels_cy is None, reason="compiled kernels not built")


def random_system(n, seed, zero_diag_rows=()):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=0.3, random_state=rng, format="csr")
    A = A + sp.diags(2.0 + rng.random(n))
    A = A.tocsr()
    Ad = A.toarray()
    for i in zero_diag_rows:
        Ad[i, i] = 0.0
    A = sp.csr_matrix(Ad)
    A.indptr = A.indptr.astype(np.int32)
    A.indices = A.indices.astype(np.int32)
    b = rng.standard_normal(n)
    x = rng.standard_normal(n)
    return A, x, b


def run_gs(impl, A, x, b, start, stop, step):
    y = x.copy()
    impl.gauss_seidel(A.indptr, A.indices, A.data, y, b, start, stop, step)
    return y


@needs_compiled
@pytest.mark.parametrize("direction", ["forward", "backward"])
def test_gauss_seidel_backends_agree(direction):
    for seed in range(5):
        A, x, b = random_system(12, seed)
        if direction == "forward":
            args = (0, 12, 1)
        else:
            args = (11, -1, -1)
        y_py = run_gs(_kernels_py, A, x, b, *args)
        y_cy = run_gs(_kernels_cy, A, x, b, *args)
        assert np.array_equal(y_py, y_cy)  # identical operation order


@needs_compiled
def test_gauss_seidel_backends_agree_on_zero_diagonal():
    A, x, b = random_system(10, 42, zero_diag_rows=(3, 7))
    y_py = run_gs(_kernels_py, A, x, b, 0, 10, 1)
    y_cy = run_gs(_kernels_cy, A, x, b, 0, 10, 1)
    assert np.array_equal(y_py, y_cy)
    assert y_py[3] == x[3] and y_py[7] == x[7]  # skipped rows untouched


@needs_compiled
def test_schwarz_backends_agree():
    for seed in range(3):
        A, x, b = random_system(12, 100 + seed)
        dofs = np.arange(12, dtype=np.int64).reshape(4, 3)
        Ad = A.toarray()
        inv = np.stack([np.linalg.inv(Ad[np.ix_(d, d)]) for d in dofs])
        for order in (np.arange(4, dtype=np.int64),
                      np.arange(3, -1, -1, dtype=np.int64)):
            y_py = x.copy()
            _kernels_py.schwarz_sweep(A.indptr, A.indices, A.data, y_py, b,
                                      dofs, inv, order)
            y_cy = x.copy()
            _kernels_cy.schwarz_sweep(A.indptr, A.indices, A.data, y_cy, b,
                                      dofs, inv, order)
            assert np.allclose(y_py, y_cy, rtol=0, atol=1e-14)


def _backend_in_subprocess(env_extra):
    env = dict(os.environ, **env_extra)
    out = subprocess.run(
        [sys.executable, "-c",
         "from nkamg import _kernels; print(_kernels.backend)"],
        capture_output=True, text=True, env=env, check=True)
    return out.stdout.strip()


def test_env_var_forces_python_backend():
    assert _backend_in_subprocess({"NKAMG_PURE_PYTHON": "1"}) == "_kernels_py"


@needs_compiled
def test_default_backend_is_compiled():
    env = {k: v for k, v in os.environ.items() if k != "NKAMG_PURE_PYTHON"}
    out = subprocess.run(
        [sys.executable, "-c",
         "from nkamg import _kernels; print(_kernels.backend)"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "_kernels_cy"
    assert _kernels.backend in ("_kernels_cy", "_kernels_py")
