"""Interpolation constructions for the staggered Stokes saddle system.

Velocity DoFs of the MAC discretization sit on the faces of the
pressure-cell lattice, and the pressure dual G^T A_e G plays the same role
the nodal auxiliary operator plays for edge elements: coarsening it
coarsens the whole saddle system.  Two families are provided.

* ``nodal_split`` + ``block_interpolation`` / ``global_ideal_interpolation``:
  under magnitude strength the dual's corner couplings count as strong, the
  C/F split keeps every fourth pressure cell, and the matching pairs the
  two collinear faces between coarse axis neighbors, leaving half the
  velocities unclaimed.  The block variant is diag(P_e, P_N): ideal
  velocity interpolation with respect to A_e next to classical ideal
  pressure interpolation on the dual.  The global variant re-solves the
  ideal conditions of the full saddle operator over the unclaimed
  velocities and the corner fine cells, starting from the block
  interpolation as the tentative.

* ``face_split`` + ``sparse_interpolation``: the cheap variants coarsen the
  dual with classical (negative) strength instead, which keeps half the
  pressures (red-black); the collinear matching then claims every velocity
  (P_e = R^T) and the pressures interpolate by injection.  The diagonal
  option swaps in an alternative velocity basis with one parallel-face
  path per diagonally adjacent coarse pair, and the smoothed options relax
  one tentative by a Richardson pass: the pressure injection on the dual
  for the collinear basis, the velocity basis on A_e for the diagonal one.

Both matchings restrict paths to face pairs adjacent in the pattern of A_e;
without that restriction the greedy claim order would mix L-shaped paths
into the straight-path bases.
"""
import numpy as np
import scipy.sparse as sp

from .coarsen import (cf_split, classical_ideal_interpolation,
                      form_split_basis, ideal_interpolation,
                      operator_complexity, strength_neighbors)
from .rng import seeded_vector
from .sparsela import from_coo, sptriple

__all__ = [
    "nodal_split",
    "face_split",
    "pressure_dual",
    "block_interpolation",
    "global_ideal_interpolation",
    "sparse_interpolation",
    "vanka_patches",
]

_SQRT2 = np.sqrt(2.0)


def pressure_dual(st):
    """The nodal dual G^T A_e G of the velocity block."""
    return sptriple(st.G.T.tocsr(), st.A_e, st.G)


def nodal_split(st):
    """Velocity splitting basis and quarter-density pressure C/F split.

    Returns (basis, is_coarse).  Magnitude strength on the pressure dual
    admits the corner couplings, so the greedy split keeps every fourth
    cell; the matching pairs the two collinear faces through the fine cell
    between coarse axis neighbors, claiming half the velocity DoFs.
    """
    A_p = pressure_dual(st)
    cf = cf_split(A_p, mode="abs")
    basis = form_split_basis(A_p, st.G, cf, dof_adjacency=st.A_e,
                             mode="abs")
    return basis, cf


def face_split(st):
    """Red-black pressure split and collinear face matching on the dual.

    Returns (basis, is_coarse, A_p) where A_p = G^T A_e G.  Every coarse
    pressure pair at strength distance two along an axis claims the two
    faces of the straight path through the fine cell between them; at
    red-black coarsening this claims every velocity DoF (basis.S is empty)
    and the skipped pairs are exactly the diagonally adjacent coarse pairs.
    """
    A_p = pressure_dual(st)
    cf = cf_split(A_p)
    basis = form_split_basis(A_p, st.G, cf, dof_adjacency=st.A_e)
    return basis, cf, A_p


def block_interpolation(st, split=None):
    """P = diag(P_e, P_N) from the nodal splitting; returns (P, P_e, P_N).

    P_e is the ideal interpolation of the velocity splitting with respect
    to A_e; P_N is the classical ideal interpolation of the pressure dual
    on the same C/F split.
    """
    vb, cf = split if split is not None else nodal_split(st)
    P_e = ideal_interpolation(st.A_e, vb.R, vb.S)
    P_N = classical_ideal_interpolation(pressure_dual(st), cf)
    P = sp.block_diag([P_e, P_N], format="csr")
    return P, P_e, P_N


def global_ideal_interpolation(st, split=None):
    """Ideal-form interpolation of the saddle operator; returns P.

    The combined R stacks the velocity path rows on the coarse pressure
    selection, and the combined S stacks the unclaimed velocities on the
    corner fine cells — the fine pressures with no strong coarse neighbor
    in the dual.  Keeping every fine pressure in S instead makes S^T A S
    exactly singular: the claimed faces are precisely the faces incident to
    coarse cells, so the constant on the fine cells has no unclaimed
    divergence and is invisible to the patch.  The block interpolation
    serves as the tentative, so the pressure kernel is reproduced through
    P_N and the solve only re-harmonizes the S rows against the full saddle
    coupling; R P = I_c survives because S has no support on coarse rows.
    """
    vb, cf = split if split is not None else nodal_split(st)
    P_blk = block_interpolation(st, (vb, cf))[0]
    strong = strength_neighbors(pressure_dual(st))
    corner = np.array(
        [i for i in range(st.n_p)
         if not cf[i] and not any(cf[j] for j in strong[i])],
        dtype=np.int64)
    S_p = from_coo(corner, np.arange(corner.size), np.ones(corner.size),
                   (st.n_p, corner.size))
    S = sp.block_diag([vb.S, S_p], format="csr")
    P = ideal_interpolation(st.A, P_blk.T.tocsr(), S)
    P.sort_indices()
    return P


def _diagonal_face_rows(st, base):
    """One face-pair row per diagonally adjacent coarse pressure pair.

    The rule is the same one the collinear matching applies to axis pairs:
    pick a face of each endpoint cell so the two faces are adjacent in the
    pattern of A_e (for diagonal neighbors that means two parallel faces
    one lattice step apart), with signs from the face orientations relative
    to the endpoints.  Each face serves the two diagonal pairs it sits
    between, so the rows share DoFs and R R^T is no longer the identity;
    the rows are unit-normalized only.
    """
    Ae = st.A_e.tocsr()
    Gc = st.G.tocsc()
    sup = []
    val = []
    for c in range(st.n_p):
        lo, hi = Gc.indptr[c], Gc.indptr[c + 1]
        sup.append([int(x) for x in Gc.indices[lo:hi]])
        val.append({int(x): float(v)
                    for x, v in zip(Gc.indices[lo:hi], Gc.data[lo:hi])})
    rows = []
    for i, j in base.skipped_pairs:
        found = None
        for d1 in sorted(sup[i]):
            nbrs = set(int(x) for x in
                       Ae.indices[Ae.indptr[d1]:Ae.indptr[d1 + 1]])
            for d2 in sorted(sup[j]):
                if d2 != d1 and d2 in nbrs:
                    found = (d1, d2)
                    break
            if found:
                break
        if found:
            d1, d2 = found
            s1 = -1.0 if val[i][d1] > 0 else 1.0
            s2 = 1.0 if val[j][d2] > 0 else -1.0
            rows.append((d1, s1 / _SQRT2, d2, s2 / _SQRT2))
    r_idx, c_idx, vals = [], [], []
    for r, (d1, v1, d2, v2) in enumerate(rows):
        r_idx += [r, r]
        c_idx += [d1, d2]
        vals += [v1, v2]
    return from_coo(r_idx, c_idx, vals, (len(rows), st.n_vel))


def _richardson_smooth(A_e, P_e, omega, seed=777, power_iters=10):
    """P <- (I - omega/rho_hat * A) P with rho_hat from power iteration."""
    v = seeded_vector(A_e.shape[0], seed)
    v /= np.linalg.norm(v)
    rho = 1.0
    for _ in range(power_iters):
        w = A_e @ v
        rho = np.linalg.norm(w)
        v = w / rho
    return (P_e - (omega / rho) * (A_e @ P_e)).tocsr()


def sparse_interpolation(st, diagonal=False, richardson_steps=0,
                         omega=2.0 / 3.0):
    """Cheap Stokes interpolation P = diag(P_e, P_N); returns (P, info).

    P_e is the transpose of the face-pair rows: the collinear pairs across
    fine cells, or — when ``diagonal`` — the alternative basis with one
    parallel-face pair per diagonally adjacent coarse pair, which keeps
    the coarse velocity count unchanged.  P_N is the injection of the
    coarse pressures.  ``richardson_steps = 1`` relaxes one tentative:
    for the collinear basis the pressure injection gets a Richardson pass
    on the dual G^T A_e G (the collinear P_e is left alone — its paths
    end on coarse cells, which is what keeps the coarse correction
    divergence-free); for the diagonal basis the velocity columns get the
    Richardson pass on A_e.  ``info`` records the coarse counts and the
    Galerkin operator complexity.
    """
    if richardson_steps not in (0, 1):
        raise ValueError("richardson_steps must be 0 or 1")
    base, cf, A_p = face_split(st)
    R_vel = _diagonal_face_rows(st, base) if diagonal else base.R
    P_e = R_vel.T.tocsr()
    cidx = np.nonzero(cf)[0]
    P_N = from_coo(cidx, np.arange(cidx.size), np.ones(cidx.size),
                   (st.n_p, cidx.size))
    if richardson_steps == 1:
        if diagonal:
            P_e = _richardson_smooth(st.A_e, P_e, omega)
        else:
            P_N = _richardson_smooth(A_p, P_N, omega)
    P = sp.block_diag([P_e, P_N], format="csr")
    A_c = sptriple(P.T.tocsr(), st.A, P)
    info = {"n_vel_rows": R_vel.shape[0], "n_press_coarse": cidx.size,
            "complexity": operator_complexity(st.A, A_c)}
    return P, info


def vanka_patches(st):
    """One patch per pressure cell: its four faces plus the pressure DoF."""
    n = st.n
    patches = []
    for cell in range(st.n_p):
        i, j = cell % n, cell // n
        patches.append([
            st.mesh.hedge(i - 1, j), st.mesh.hedge(i, j),
            st.mesh.vedge(i, j - 1), st.mesh.vedge(i, j),
            st.n_vel + cell,
        ])
    return patches
