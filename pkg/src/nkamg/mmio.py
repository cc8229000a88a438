"""MatrixMarket I/O with a small key=value metadata sidecar.

Operators are exchanged as standard MatrixMarket coordinate files (1-based,
real; symmetric storage when the matrix is symmetric), so they can be loaded
by any MatrixMarket-aware tool.  An optional sidecar file ``<path>.info``
holds experiment metadata as ``key = value`` lines.
"""
import os

import scipy.io
import scipy.sparse as sp

__all__ = ["write_matrix", "read_matrix"]


def write_matrix(path, A, metadata=None):
    """Write A (any scipy.sparse matrix) to a MatrixMarket file.

    Values are written with 17 significant digits so the round trip is exact
    for float64.  If ``metadata`` is given, it is written to ``<path>.info``
    as one ``key = value`` line per entry (insertion order preserved).
    """
    scipy.io.mmwrite(path, sp.coo_matrix(A), precision=17)
    if metadata:
        with open(str(path) + ".info", "w") as fh:
            for key, value in metadata.items():
                fh.write(f"{key} = {value}\n")


def read_matrix(path):
    """Read a MatrixMarket file; returns (csr_matrix, metadata dict).

    The metadata dict is read from ``<path>.info`` if present (values are
    returned as strings), otherwise empty.
    """
    A = sp.csr_matrix(scipy.io.mmread(path))
    A.sort_indices()
    meta = {}
    info = str(path) + ".info"
    if os.path.exists(info):
        with open(info) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                meta[key.strip()] = value.strip()
    return A, meta
