"""Compatible relaxation: how fast does relaxation alone converge on the
complement space S?

If relaxation contracts quickly on span(S) (rate well below 1), the coarse
space is rich enough that a two-grid method with some interpolation onto it
can work; a rate near 1 flags DoFs the splitting fails to cover — the final
error's magnitude profile shows where.

Three variants of the error iteration, all starting from a seeded random
error projected onto span(S) and measuring the asymptotic rate

    rho = (||e_K|| / ||e_K0||)^(1/(K - K0)),   K0 = ceil(K/2):

* "primary": iterate u <- (I - B_s A_SS) u in S-coordinates, A_SS = S^T A S,
  with B_s a smoother built on A_SS (forward Gauss-Seidel by default);
* "srelax": full-space complement correction e <- e - S B_s S^T A e with the
  same S-space smoother;
* "habituated": the smoother actually used by the solver, applied in full
  space and re-projected after every sweep: e <- S S^T (I - B A) e.  This is
  the variant the experiment drivers report, since it measures the
  relaxation the two-grid method really performs.
"""
from math import ceil

import numpy as np

from .rng import seeded_vector
from .smoothers import GaussSeidel
from .sparsela import sptriple

__all__ = ["cr_rate", "CRResult"]


class CRResult:
    """rate, per-iteration error norms, and the final full-space error."""

    def __init__(self, rate, norms, error):
        self.rate = rate
        self.norms = norms
        self.error = error


def cr_rate(A, S, variant="habituated", smoother=None, iters=30, seed=12345):
    """Compatible relaxation rate for the complement basis S.

    ``smoother`` is required for the habituated variant (a full-space
    smoother on A); for the other variants it is rebuilt on S^T A S when
    given, defaulting to forward Gauss-Seidel there.
    """
    n = A.shape[0]
    ST = S.T.tocsr()
    e0 = S @ (ST @ seeded_vector(n, seed))

    if variant == "habituated":
        if smoother is None:
            raise ValueError("habituated CR needs the full-space smoother")
        e = e0
        norms = [np.linalg.norm(e)]
        for _ in range(iters):
            e = smoother.apply(e, np.zeros(n))
            e = S @ (ST @ e)
            norms.append(np.linalg.norm(e))
        err = e
    elif variant in ("primary", "srelax"):
        A_SS = sptriple(ST, A, S)
        sm = smoother.rebuild(A_SS) if smoother is not None \
            else GaussSeidel(A_SS, "forward")
        if variant == "primary":
            u = ST @ e0
            norms = [np.linalg.norm(u)]
            for _ in range(iters):
                u = sm.apply(u, np.zeros(u.shape[0]))
                norms.append(np.linalg.norm(u))
            err = S @ u
        else:
            e = e0
            norms = [np.linalg.norm(e)]
            for _ in range(iters):
                e = e - S @ sm.apply_B(ST @ (A @ e))
                norms.append(np.linalg.norm(e))
            err = e
    else:
        raise ValueError(f"unknown CR variant {variant!r}")

    k0 = ceil(iters / 2)
    if norms[k0] == 0.0:
        rate = 0.0
    else:
        rate = (norms[iters] / norms[k0]) ** (1.0 / (iters - k0))
    return CRResult(rate, np.asarray(norms), err)
