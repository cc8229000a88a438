"""Two-grid cycles, Krylov drivers, and convergence-rate measurement.

The two-grid step used for stationary rate measurements is coarse correction
followed by one smoother application, i.e. the error propagator

    E = (I - B A)(I - P A_c^{-1} P^T A),        A_c = P^T A P.

For CG preconditioning the symmetric cycle (pre-smooth, coarse correction,
adjoint post-smooth) is used instead, which makes the induced preconditioner
symmetric positive definite for symmetric A and a symmetrizable smoother.

Singular operators (the periodic Stokes system) are handled by deflation:
the known kernel is removed from the right-hand side, and the coarse solve
uses a bordered factorization [[A_c, Z], [Z^T, 0]] with Z the coarse
representation of the kernel, so the coarse problem stays uniquely solvable.
"""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .rng import seeded_vector
from .sparsela import sptriple

__all__ = [
    "TwoGrid",
    "measure_rate",
    "RateResult",
    "cg",
    "pcg",
    "random_rhs",
    "orthonormal_columns",
]


def orthonormal_columns(vectors, tol=1e-12):
    """Orthonormalize a list of vectors, dropping near-dependent ones."""
    if not vectors:
        return np.zeros((0, 0))
    M = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    Q, Rm = np.linalg.qr(M)
    keep = np.abs(np.diag(Rm)) > tol * max(1.0, np.abs(Rm).max())
    return Q[:, keep]


class _CoarseSolver:
    """Direct coarse solve, optionally deflated against a kernel basis.

    The factorization path is an LU of A_c, bordered by the kernel basis
    when one is supplied.  When A_c is singular beyond the supplied kernel
    (aggregation bases can carry extra dependent rows, and coarse spurious
    modes need not match any fine kernel vector), the LU either fails or
    returns garbage; a probe solve detects that and the solver falls back
    to the minimum-norm pseudoinverse, which deflates every kernel
    direction at once.
    """

    def __init__(self, A_c, kernel=None):
        self.n = A_c.shape[0]
        self.kernel = kernel
        self.pinv = None
        self.lu = None
        self.aug = 0
        try:
            if kernel is not None and kernel.shape[1] > 0:
                B = sp.bmat([[A_c, sp.csr_matrix(kernel)],
                             [sp.csr_matrix(kernel.T), None]], format="csc")
                self.lu = spla.splu(B)
                self.aug = kernel.shape[1]
            else:
                self.lu = spla.splu(A_c.tocsc())
        except RuntimeError:
            self.lu = None
        if self.lu is not None and not self._probe_ok(A_c):
            self.lu = None
        if self.lu is None:
            self.pinv = np.linalg.pinv(A_c.toarray(), rcond=1e-10)

    def _probe_ok(self, A_c, tol=1e-8):
        probe = np.cos(0.7 * np.arange(self.n) + 0.3)
        if self.kernel is not None and self.kernel.shape[1] > 0:
            probe = probe - self.kernel @ (self.kernel.T @ probe)
        x = self._lu_solve(probe)
        if not np.all(np.isfinite(x)):
            return False
        resid = A_c @ x - probe
        if self.kernel is not None and self.kernel.shape[1] > 0:
            resid = resid - self.kernel @ (self.kernel.T @ resid)
        return np.linalg.norm(resid) <= tol * np.linalg.norm(probe)

    def _lu_solve(self, r):
        if self.aug:
            rhs = np.concatenate([r, np.zeros(self.aug)])
            return self.lu.solve(rhs)[:self.n]
        return self.lu.solve(r)

    def solve(self, r):
        if self.pinv is not None:
            return self.pinv @ r
        return self._lu_solve(r)


class TwoGrid:
    """Two-grid method: Galerkin coarse operator, direct coarse solve.

    Parameters
    ----------
    A : csr_matrix
    P : csr_matrix, n x n_c
        Interpolation; restriction is P^T.
    smoother : Smoother
    nullspace : list of ndarray, optional
        Fine-level kernel vectors of A.  Their coarse representations (when
        interpolation captures them) deflate the coarse solve, and
        ``project`` removes them from vectors.
    """

    def __init__(self, A, P, smoother, nullspace=None):
        self.A = A.tocsr()
        self.P = P.tocsr()
        self.PT = self.P.T.tocsr()
        self.smoother = smoother
        self.A_c = sptriple(self.PT, self.A, self.P)
        self.null_fine = orthonormal_columns(nullspace or [])
        coarse_kernel = self._coarse_kernel()
        self.coarse = _CoarseSolver(self.A_c, coarse_kernel)

    def _coarse_kernel(self, fit_tol=1e-8, op_tol=1e-8):
        """Coarse vectors z_c with P z_c ~ z for fine kernel z and A_c z_c ~ 0."""
        if self.null_fine.shape[1] == 0:
            return None
        PtP = (self.PT @ self.P).toarray()
        found = []
        scale = max(np.abs(self.A_c.data).max(), 1.0)
        for j in range(self.null_fine.shape[1]):
            z = self.null_fine[:, j]
            zc = np.linalg.lstsq(PtP, self.PT @ z, rcond=None)[0]
            if np.linalg.norm(self.P @ zc - z) > fit_tol * np.linalg.norm(z):
                continue
            if np.linalg.norm(self.A_c @ zc) > op_tol * scale * np.linalg.norm(zc):
                continue
            found.append(zc)
        Q = orthonormal_columns(found)
        return Q if Q.shape[1] else None

    def project(self, v):
        """Remove the known fine-level kernel components from v."""
        if self.null_fine.shape[1] == 0:
            return v
        return v - self.null_fine @ (self.null_fine.T @ v)

    def coarse_correction(self, x, b):
        r = b - self.A @ x
        return x + self.P @ self.coarse.solve(self.PT @ r)

    def step(self, x, b):
        """Stationary cycle: coarse correction, then one smoother pass."""
        x = self.coarse_correction(x, b)
        return self.smoother.apply(x, b)

    def sym_step(self, x, b):
        """Symmetric cycle: smooth, coarse correction, adjoint smooth."""
        x = self.smoother.apply(x, b)
        x = self.coarse_correction(x, b)
        return self.smoother.adjoint().apply(x, b)

    def preconditioner(self, r):
        """One symmetric cycle from zero — SPD operator for PCG."""
        x = self.smoother.apply_B(r)
        x = self.coarse_correction(x, r)
        return self.smoother.adjoint().apply(x, r)


class RateResult:
    """Outcome of a stationary iteration run."""

    def __init__(self, rate, iterations, converged, diverged, residuals):
        self.rate = rate
        self.iterations = iterations
        self.converged = converged
        self.diverged = diverged
        self.residuals = residuals

    def __repr__(self):
        flag = "converged" if self.converged else \
            ("diverged" if self.diverged else "maxiter")
        return (f"RateResult(rate={self.rate:.4f}, "
                f"iterations={self.iterations}, {flag})")


def measure_rate(step, A, b, x0=None, tol=1e-6, max_iter=300,
                 divergence_ratio=1.5, divergence_count=5, window=5):
    """Run x <- step(x, b) and report the asymptotic residual rate.

    The rate is the geometric mean of the last ``window`` residual ratios.
    Stops on relative residual <= tol, on ``divergence_count`` consecutive
    ratios above ``divergence_ratio`` (diverged flag), or at max_iter.
    """
    x = np.zeros(A.shape[0]) if x0 is None else np.array(x0, dtype=float)
    resids = [np.linalg.norm(b - A @ x)]
    if resids[0] == 0.0:
        return RateResult(0.0, 0, True, False, np.asarray(resids))
    bad = 0
    diverged = False
    converged = False
    for _ in range(max_iter):
        x = step(x, b)
        r = np.linalg.norm(b - A @ x)
        resids.append(r)
        ratio = r / resids[-2] if resids[-2] > 0 else np.inf
        bad = bad + 1 if ratio > divergence_ratio else 0
        if bad >= divergence_count:
            diverged = True
            break
        if r <= tol * resids[0]:
            converged = True
            break
    resids = np.asarray(resids)
    k = len(resids) - 1
    w = min(window, k)
    rate = (resids[k] / resids[k - w]) ** (1.0 / w) if w > 0 else 0.0
    return RateResult(rate, k, converged, diverged, resids)


def random_rhs(n, seed):
    """Reproducible uniform [-1,1) right-hand side."""
    return seeded_vector(n, seed)


def cg(A, b, tol=1e-8, max_iter=1000, x0=None):
    """Plain conjugate gradients on A x = b; returns (x, RateResult)."""
    return pcg(A, b, None, tol=tol, max_iter=max_iter, x0=x0)


def pcg(A, b, apply_M, tol=1e-8, max_iter=1000, x0=None):
    """Preconditioned conjugate gradients; apply_M=None gives plain CG.

    Convergence is declared on the true residual: ||b - A x|| <= tol ||b||.
    Returns (x, RateResult); the rate field is the mean residual reduction
    per step over the whole run.
    """
    x = np.zeros(A.shape[0]) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = apply_M(r) if apply_M is not None else r
    p = z.copy()
    rz = r @ z
    nb = np.linalg.norm(b)
    resids = [np.linalg.norm(r)]
    if nb == 0.0 or resids[0] <= tol * nb:
        return x, RateResult(0.0, 0, True, False, np.asarray(resids))
    converged = False
    for _ in range(max_iter):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        resids.append(np.linalg.norm(r))
        if resids[-1] <= tol * nb:
            converged = True
            break
        z = apply_M(r) if apply_M is not None else r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    resids = np.asarray(resids)
    k = len(resids) - 1
    rate = (resids[k] / resids[0]) ** (1.0 / k) if k > 0 else 0.0
    return x, RateResult(rate, k, converged, False, resids)
