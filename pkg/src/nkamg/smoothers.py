"""Smoothers: L1-Jacobi, Gauss-Seidel, distributive, Schwarz, composite.

Every smoother represents a stationary step x -> x + B(b - A x) with some
approximate inverse B, exposed through three operations:

* ``apply(x, b)``: one step of the stationary iteration;
* ``apply_B(r)``: the bare correction B r (= apply(0, r));
* ``adjoint()``: the smoother with B replaced by B^T.

Error propagators therefore compose as products of (I - B A); wrapping a
smoother in ``Symmetrized`` gives the step (I - B^T A)(I - B A), whose
effective B is symmetric whenever A is, which is what CG preconditioning
requires.

The distributive smoother corrects through an auxiliary space: one
Gauss-Seidel sweep on N^T A N applied to the projected residual, prolongated
back by N.  With N the discrete gradient this relaxes the curl-free error
components that pointwise smoothers cannot touch.
"""
import numpy as np

from . import _kernels
from .sparsela import sptriple

__all__ = [
    "Smoother",
    "L1Jacobi",
    "GaussSeidel",
    "Distributive",
    "Schwarz",
    "Composite",
    "Symmetrized",
    "composite_edge_smoother",
]


class Smoother:
    """Base class; subclasses set self.A and implement apply/adjoint."""

    def apply(self, x, b):
        raise NotImplementedError

    def apply_B(self, r):
        return self.apply(np.zeros_like(r), r)

    def adjoint(self):
        raise NotImplementedError

    def rebuild(self, A):
        """Same smoother configuration on a different operator."""
        raise NotImplementedError(
            f"{type(self).__name__} does not support rebuild")


def _csr_arrays(A):
    A = A.tocsr()
    A.sort_indices()
    return (A.indptr.astype(np.int32, copy=False),
            A.indices.astype(np.int32, copy=False),
            A.data.astype(np.float64, copy=False))


class L1Jacobi(Smoother):
    """Damped Jacobi with the L1 diagonal d_i = sum_j |a_ij|.

    The L1 diagonal makes the undamped iteration contractive for symmetric
    A; omega = 0.5 is the conventional default.
    """

    def __init__(self, A, omega=0.5):
        self.A = A.tocsr()
        self.omega = omega
        d = np.asarray(np.abs(self.A).sum(axis=1)).ravel()
        if np.any(d == 0.0):
            raise ValueError("L1Jacobi: matrix has an empty row")
        self.dinv = omega / d

    def apply(self, x, b):
        return x + self.dinv * (b - self.A @ x)

    def adjoint(self):
        return self

    def rebuild(self, A):
        return L1Jacobi(A, self.omega)


class GaussSeidel(Smoother):
    """Forward or backward Gauss-Seidel sweep (one pass per apply)."""

    def __init__(self, A, direction="forward"):
        if direction not in ("forward", "backward"):
            raise ValueError(f"unknown direction {direction!r}")
        self.A = A.tocsr()
        self.direction = direction
        self._arrays = _csr_arrays(self.A)

    def apply(self, x, b):
        x = np.array(x, dtype=np.float64, copy=True)
        b = np.asarray(b, dtype=np.float64)
        n = self.A.shape[0]
        if self.direction == "forward":
            args = (0, n, 1)
        else:
            args = (n - 1, -1, -1)
        _kernels.gauss_seidel(*self._arrays, x, b, *args)
        return x

    def adjoint(self):
        other = "backward" if self.direction == "forward" else "forward"
        return GaussSeidel(self.A, other)

    def rebuild(self, A):
        return GaussSeidel(A, self.direction)


class Distributive(Smoother):
    """Auxiliary-space correction x += N z, (D+L)_{N^T A N} z = N^T r.

    One forward (or backward, for the adjoint) Gauss-Seidel sweep from zero
    on the auxiliary operator N^T A N.
    """

    def __init__(self, A, N, direction="forward", _aux=None):
        self.A = A.tocsr()
        self.N = N.tocsr()
        self.NT = self.N.T.tocsr()
        self.aux = _aux if _aux is not None else sptriple(self.NT, self.A, self.N)
        self.gs = GaussSeidel(self.aux, direction)

    def apply(self, x, b):
        r = b - self.A @ x
        z = self.gs.apply(np.zeros(self.aux.shape[0]), self.NT @ r)
        return x + self.N @ z

    def adjoint(self):
        other = "backward" if self.gs.direction == "forward" else "forward"
        return Distributive(self.A, self.N, other, _aux=self.aux)


class Schwarz(Smoother):
    """Multiplicative Schwarz over equally sized DoF patches.

    Each patch block of A is inverted densely up front; a sweep visits the
    patches in the given order, recomputing the local residual before each
    patch solve.  The adjoint is the sweep in reverse order.
    """

    def __init__(self, A, patches, direction="forward", _shared=None):
        self.A = A.tocsr()
        self.direction = direction
        if _shared is not None:
            self.dofs, self.inv, self._arrays = _shared
        else:
            sizes = {len(p) for p in patches}
            if len(sizes) != 1:
                raise ValueError("Schwarz patches must all have the same size")
            k = sizes.pop()
            self.dofs = np.asarray(patches, dtype=np.int64).reshape(len(patches), k)
            self.inv = np.empty((len(patches), k, k))
            Ad = self.A
            for p, idx in enumerate(self.dofs):
                block = Ad[idx][:, idx].toarray()
                try:
                    self.inv[p] = np.linalg.inv(block)
                except np.linalg.LinAlgError:
                    raise ValueError(f"Schwarz: patch {p} block is singular")
            self._arrays = _csr_arrays(self.A)
        n_patches = self.dofs.shape[0]
        if direction == "forward":
            self.order = np.arange(n_patches, dtype=np.int64)
        else:
            self.order = np.arange(n_patches - 1, -1, -1, dtype=np.int64)

    def apply(self, x, b):
        x = np.array(x, dtype=np.float64, copy=True)
        b = np.asarray(b, dtype=np.float64)
        _kernels.schwarz_sweep(*self._arrays, x, b, self.dofs, self.inv,
                               self.order)
        return x

    def adjoint(self):
        other = "backward" if self.direction == "forward" else "forward"
        return Schwarz(self.A, None, other,
                       _shared=(self.dofs, self.inv, self._arrays))


class Composite(Smoother):
    """Sequential application of several smoothers (same A)."""

    def __init__(self, parts):
        if not parts:
            raise ValueError("Composite needs at least one smoother")
        self.parts = list(parts)
        self.A = self.parts[0].A

    def apply(self, x, b):
        for s in self.parts:
            x = s.apply(x, b)
        return x

    def adjoint(self):
        return Composite([s.adjoint() for s in reversed(self.parts)])


class Symmetrized(Smoother):
    """Forward pass followed by the adjoint pass; self-adjoint overall."""

    def __init__(self, inner):
        self.inner = inner
        self.A = inner.A

    def apply(self, x, b):
        x = self.inner.apply(x, b)
        return self.inner.adjoint().apply(x, b)

    def adjoint(self):
        return self


def composite_edge_smoother(A, gradient, omega=0.5, symmetrize=False):
    """The curl-curl smoother: distributive (nodal) pass then L1-Jacobi.

    ``gradient`` is the node-to-edge incidence; the distributive pass runs a
    forward Gauss-Seidel sweep on the nodal operator G^T A G.  With
    ``symmetrize`` the whole composite is followed by its adjoint.
    """
    comp = Composite([Distributive(A, gradient), L1Jacobi(A, omega)])
    return Symmetrized(comp) if symmetrize else comp
