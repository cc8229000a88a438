"""Kernel backend selection.

Imports the compiled Cython kernels when available, falling back to the
pure-Python reference implementations.  Set the environment variable
``NKAMG_PURE_PYTHON=1`` to force the fallback (used by the benchmark and to
verify both backends agree).
"""
import os

if os.environ.get("NKAMG_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        from . import _kernels_py as _impl

gauss_seidel = _impl.gauss_seidel
schwarz_sweep = _impl.schwarz_sweep
backend = _impl.__name__.rsplit(".", 1)[-1]
