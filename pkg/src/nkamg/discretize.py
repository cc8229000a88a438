"""Edge-element curl-curl and staggered Stokes test operators.

Three model problems on the unit square:

* ``quad_mesh_periodic`` + ``curl_curl``: lowest-order edge elements on a
  uniform quadrilateral mesh, periodic in both directions;
* ``tri_mesh_dirichlet`` + ``curl_curl``: lowest-order edge (Whitney)
  elements on a uniform right-triangle mesh (squares cut along the
  lower-left to upper-right diagonal), homogeneous tangential boundary
  conditions imposed by eliminating boundary edges;
* ``stokes_mac``: staggered (MAC) finite differences for Stokes, periodic,
  velocities on cell faces and pressures at cell centers.

The curl-curl operator is A = A_s + beta * A_m with A_s the curl-curl
stiffness and A_m the edge mass matrix.  The node-to-edge incidence matrix G
(discrete gradient) satisfies A_s @ G = 0 exactly; discrete gradients are
the troublesome near kernel of A for small beta.

Edge numbering on both meshes is horizontal edges first (row-major), then
vertical (row-major), then — on the triangle mesh — diagonals (row-major).
Edges are oriented along +x, +y, and (+x,+y) respectively.
"""
import numpy as np
import scipy.sparse as sp

from .sparsela import from_coo

__all__ = [
    "quad_mesh_periodic",
    "tri_mesh_dirichlet",
    "curl_curl",
    "fe_prolongation",
    "stokes_mac",
    "CurlCurlOperator",
    "StokesOperator",
]


class QuadMeshPeriodic:
    """Uniform nx-by-ny quadrilateral mesh on the unit square, fully periodic.

    Nodes, horizontal edges, vertical edges and cells all live on congruent
    row-major lattices of size nx*ny.  h = 1/nx (nx == ny is the usual case).
    """

    kind = "quad_periodic"

    def __init__(self, nx, ny=None):
        ny = nx if ny is None else ny
        if nx < 2 or ny < 2:
            raise ValueError("quad mesh needs nx, ny >= 2")
        self.nx, self.ny = nx, ny
        self.h = 1.0 / nx
        self.n_nodes = nx * ny
        self.n_edges = 2 * nx * ny

        nxy = nx * ny
        e = np.arange(nxy)
        i, j = e % nx, e // nx
        # horizontal edge e runs node(i,j) -> node(i+1,j)
        htail, hhead = e, j * nx + (i + 1) % nx
        # vertical edge nxy+e runs node(i,j) -> node(i,j+1)
        vtail, vhead = e, ((j + 1) % ny) * nx + i
        self.edge_tail = np.concatenate([htail, vtail])
        self.edge_head = np.concatenate([hhead, vhead])
        h = self.h
        self.edge_mid = np.vstack([
            np.column_stack([(i + 0.5) * h, j * h]),
            np.column_stack([i * h, (j + 0.5) * h]),
        ])

    def node(self, i, j):
        return (j % self.ny) * self.nx + (i % self.nx)

    def hedge(self, i, j):
        return (j % self.ny) * self.nx + (i % self.nx)

    def vedge(self, i, j):
        return self.nx * self.ny + (j % self.ny) * self.nx + (i % self.nx)

    def gradient(self):
        """Node-to-edge incidence G (n_edges x n_nodes): (Gp)_e = p_head - p_tail."""
        ne = self.n_edges
        rows = np.repeat(np.arange(ne), 2)
        cols = np.column_stack([self.edge_head, self.edge_tail]).ravel()
        vals = np.tile([1.0, -1.0], ne)
        return from_coo(rows, cols, vals, (ne, self.n_nodes))


class TriMeshDirichlet:
    """Uniform right-triangle mesh on the unit square, boundary edges removed.

    Each of the nx*ny squares is split along its lower-left to upper-right
    diagonal.  Boundary edges (those lying on the outer square) carry
    homogeneous tangential conditions and are eliminated; all arrays and
    operators returned by this mesh are indexed by the remaining interior
    edges.  ``full`` indices refer to the uneliminated enumeration.
    """

    kind = "tri_dirichlet"

    def __init__(self, nx, ny=None):
        ny = nx if ny is None else ny
        if nx < 2 or ny < 2:
            raise ValueError("triangle mesh needs nx, ny >= 2")
        self.nx, self.ny = nx, ny
        self.h = 1.0 / nx
        self.n_h = nx * (ny + 1)
        self.n_v = (nx + 1) * ny
        self.n_d = nx * ny
        self.n_edges_full = self.n_h + self.n_v + self.n_d
        self.n_nodes_full = (nx + 1) * (ny + 1)

        # full tail/head node ids per edge
        tail = np.empty(self.n_edges_full, dtype=np.int64)
        head = np.empty(self.n_edges_full, dtype=np.int64)
        mid = np.empty((self.n_edges_full, 2))
        h = self.h
        for j in range(ny + 1):
            for i in range(nx):
                e = self.hedge_full(i, j)
                tail[e], head[e] = self.node_full(i, j), self.node_full(i + 1, j)
                mid[e] = ((i + 0.5) * h, j * h)
        for j in range(ny):
            for i in range(nx + 1):
                e = self.vedge_full(i, j)
                tail[e], head[e] = self.node_full(i, j), self.node_full(i, j + 1)
                mid[e] = (i * h, (j + 0.5) * h)
        for b in range(ny):
            for a in range(nx):
                e = self.dedge_full(a, b)
                tail[e], head[e] = self.node_full(a, b), self.node_full(a + 1, b + 1)
                mid[e] = ((a + 0.5) * h, (b + 0.5) * h)
        self.edge_tail_full, self.edge_head_full = tail, head

        keep = np.ones(self.n_edges_full, dtype=bool)
        for i in range(nx):
            keep[self.hedge_full(i, 0)] = False
            keep[self.hedge_full(i, ny)] = False
        for j in range(ny):
            keep[self.vedge_full(0, j)] = False
            keep[self.vedge_full(nx, j)] = False
        self.edge_keep = keep
        self.int_of_full = np.full(self.n_edges_full, -1, dtype=np.int64)
        self.full_of_int = np.nonzero(keep)[0]
        self.int_of_full[self.full_of_int] = np.arange(self.full_of_int.size)
        self.n_edges = self.full_of_int.size
        self.edge_mid = mid[keep]

        # interior nodes (Dirichlet nodes eliminated from the nodal space)
        node_int = np.full(self.n_nodes_full, -1, dtype=np.int64)
        k = 0
        for j in range(1, ny):
            for i in range(1, nx):
                node_int[self.node_full(i, j)] = k
                k += 1
        self.node_int_of_full = node_int
        self.n_nodes = k

    def node_full(self, i, j):
        return j * (self.nx + 1) + i

    def node_xy(self, nid):
        i, j = nid % (self.nx + 1), nid // (self.nx + 1)
        return np.array([i * self.h, j * self.h])

    def hedge_full(self, i, j):
        return j * self.nx + i

    def vedge_full(self, i, j):
        return self.n_h + j * (self.nx + 1) + i

    def dedge_full(self, a, b):
        return self.n_h + self.n_v + b * self.nx + a

    def triangles(self):
        """Yield (vertex ids, [(full edge id, (local tail, local head)), ...]).

        Two triangles per square: the lower-right one (vertices LL, LR, UR)
        and the upper-left one (vertices LL, UR, UL).
        """
        for b in range(self.ny):
            for a in range(self.nx):
                p_ll = self.node_full(a, b)
                p_lr = self.node_full(a + 1, b)
                p_ur = self.node_full(a + 1, b + 1)
                p_ul = self.node_full(a, b + 1)
                yield (p_ll, p_lr, p_ur), [
                    (self.hedge_full(a, b), (0, 1)),
                    (self.vedge_full(a + 1, b), (1, 2)),
                    (self.dedge_full(a, b), (0, 2)),
                ]
                yield (p_ll, p_ur, p_ul), [
                    (self.dedge_full(a, b), (0, 1)),
                    (self.hedge_full(a, b + 1), (2, 1)),
                    (self.vedge_full(a, b), (0, 2)),
                ]

    def gradient(self):
        """Incidence from interior nodes to interior edges."""
        rows, cols, vals = [], [], []
        for e_full in self.full_of_int:
            e = self.int_of_full[e_full]
            for nid, s in ((self.edge_head_full[e_full], 1.0),
                           (self.edge_tail_full[e_full], -1.0)):
                n_int = self.node_int_of_full[nid]
                if n_int >= 0:
                    rows.append(e)
                    cols.append(n_int)
                    vals.append(s)
        return from_coo(rows, cols, vals, (self.n_edges, self.n_nodes))

    def boundary_touching_mask(self):
        """Interior edges with at least one endpoint on the outer boundary."""
        mask = np.zeros(self.n_edges, dtype=bool)
        for e_full in self.full_of_int:
            for nid in (self.edge_tail_full[e_full], self.edge_head_full[e_full]):
                i, j = nid % (self.nx + 1), nid // (self.nx + 1)
                if i == 0 or i == self.nx or j == 0 or j == self.ny:
                    mask[self.int_of_full[e_full]] = True
        return mask


def quad_mesh_periodic(nx, ny=None):
    return QuadMeshPeriodic(nx, ny)


def tri_mesh_dirichlet(nx, ny=None):
    return TriMeshDirichlet(nx, ny)


class CurlCurlOperator:
    """Assembled curl-curl operator A = stiffness + beta * mass."""

    def __init__(self, mesh, stiffness, mass, beta):
        self.mesh = mesh
        self.stiffness = stiffness
        self.mass = mass
        self.beta = beta
        A = (stiffness + beta * mass).tocsr()
        A.sort_indices()
        self.A = A

    def gradient(self):
        return self.mesh.gradient()


def _tri_geometry(p0, p1, p2):
    """Area and barycentric gradients of a triangle given vertex coords."""
    M = np.array([[p0[0], p0[1], 1.0],
                  [p1[0], p1[1], 1.0],
                  [p2[0], p2[1], 1.0]])
    area = 0.5 * abs(np.linalg.det(M))
    # rows a of inv(M)^T give [dlam_a/dx, dlam_a/dy, lam_a(0)]
    C = np.linalg.inv(M)
    grads = C[:2, :].T  # (3, 2)
    return area, grads


def _tri_bary(p0, p1, p2, x):
    """Barycentric coordinates of point x in triangle (p0, p1, p2)."""
    M = np.array([[p0[0], p1[0], p2[0]],
                  [p0[1], p1[1], p2[1]],
                  [1.0, 1.0, 1.0]])
    return np.linalg.solve(M, np.array([x[0], x[1], 1.0]))


def curl_curl(mesh, beta=0.01):
    """Assemble A_s (curl-curl stiffness) and A_m (edge mass) on a mesh.

    Returns a CurlCurlOperator with A = A_s + beta * A_m.
    """
    if mesh.kind == "quad_periodic":
        return _curl_curl_quad(mesh, beta)
    if mesh.kind == "tri_dirichlet":
        return _curl_curl_tri(mesh, beta)
    raise ValueError(f"unknown mesh kind {mesh.kind!r}")


def _curl_curl_quad(mesh, beta):
    nx, ny, h = mesh.nx, mesh.ny, mesh.h
    e = np.arange(nx * ny)
    i, j = e % nx, e // nx
    # element (i,j) edges in the order bottom, top, left, right
    loc = [mesh.hedge(i, j), mesh.hedge(i, j + 1),
           mesh.vedge(i, j), mesh.vedge(i + 1, j)]
    # constant element curls carry signs (+,-,-,+) * 1/h^2 per unit coefficient
    c = np.array([1.0, -1.0, -1.0, 1.0])
    S_el = np.outer(c, c) / h**2
    M_el = np.array([[1 / 3, 1 / 6, 0, 0],
                     [1 / 6, 1 / 3, 0, 0],
                     [0, 0, 1 / 3, 1 / 6],
                     [0, 0, 1 / 6, 1 / 3]])  # independent of h in 2D

    def assemble(E):
        rows, cols, vals = [], [], []
        for a in range(4):
            for b in range(4):
                if E[a, b] == 0.0:
                    continue
                rows.append(loc[a])
                cols.append(loc[b])
                vals.append(np.full(e.size, E[a, b]))
        return from_coo(np.concatenate(rows), np.concatenate(cols),
                        np.concatenate(vals), (mesh.n_edges, mesh.n_edges))

    return CurlCurlOperator(mesh, assemble(S_el), assemble(M_el), beta)


def _curl_curl_tri(mesh, beta):
    nfull = mesh.n_edges_full
    rows_s, cols_s, vals_s = [], [], []
    rows_m, cols_m, vals_m = [], [], []
    for verts, edges in mesh.triangles():
        pts = [mesh.node_xy(v) for v in verts]
        area, g = _tri_geometry(*pts)
        eids = [e for e, _ in edges]
        pairs = [ab for _, ab in edges]
        # curl of the Whitney function for local edge (a,b) is 2*(g_a x g_b)
        curls = [2.0 * (g[a, 0] * g[b, 1] - g[a, 1] * g[b, 0]) for a, b in pairs]
        for ke in range(3):
            for kf in range(3):
                a, b = pairs[ke]
                c, d = pairs[kf]
                rows_s.append(eids[ke])
                cols_s.append(eids[kf])
                vals_s.append(area * curls[ke] * curls[kf])
                # mass: expand (lam_a g_b - lam_b g_a) . (lam_c g_d - lam_d g_c)
                # with int lam_p lam_q = area*(1 + delta_pq)/12
                def ii(p, q):
                    return area * (2.0 if p == q else 1.0) / 12.0
                m = (ii(a, c) * g[b] @ g[d] - ii(a, d) * g[b] @ g[c]
                     - ii(b, c) * g[a] @ g[d] + ii(b, d) * g[a] @ g[c])
                rows_m.append(eids[ke])
                cols_m.append(eids[kf])
                vals_m.append(m)
    S_full = from_coo(rows_s, cols_s, vals_s, (nfull, nfull))
    M_full = from_coo(rows_m, cols_m, vals_m, (nfull, nfull))
    keep = mesh.full_of_int
    S = S_full[keep][:, keep].tocsr()
    M = M_full[keep][:, keep].tocsr()
    S.sort_indices()
    M.sort_indices()
    return CurlCurlOperator(mesh, S, M, beta)


def _quad_basis_eval(x0, y0, H, x):
    """Edge basis of one quad element at point x, rows = (bottom, top, left, right)."""
    out = np.zeros((4, 2))
    out[0, 0] = (y0 + H - x[1]) / H**2
    out[1, 0] = (x[1] - y0) / H**2
    out[2, 1] = (x0 + H - x[0]) / H**2
    out[3, 1] = (x[0] - x0) / H**2
    return out


def fe_prolongation(coarse_mesh, fine_mesh):
    """Canonical embedding of the coarse edge-element space into the fine one.

    The fine mesh must be the uniform factor-2 refinement of the coarse mesh
    (same family).  Column E holds the fine-basis coefficients of the coarse
    basis function phi_E; coefficients are the fine edge functionals
    int_e phi_E . t ds, evaluated by the midpoint rule (exact here since
    tangential traces are affine along edges).  P^T A_fine P reproduces the
    coarse assembly exactly.
    """
    if coarse_mesh.kind != fine_mesh.kind:
        raise ValueError("meshes are from different families")
    if fine_mesh.nx != 2 * coarse_mesh.nx or fine_mesh.ny != 2 * coarse_mesh.ny:
        raise ValueError("fine mesh is not the factor-2 refinement of the coarse one")
    if coarse_mesh.kind == "quad_periodic":
        return _fe_prolongation_quad(coarse_mesh, fine_mesh)
    return _fe_prolongation_tri(coarse_mesh, fine_mesh)


def _fe_prolongation_quad(cm, fm):
    rows, cols, vals = [], [], []

    def put(fe, ce, w):
        rows.append(fe)
        cols.append(ce)
        vals.append(w)

    for j in range(cm.ny):
        for i in range(cm.nx):
            ce = cm.hedge(i, j)
            # collinear halves
            put(fm.hedge(2 * i, 2 * j), ce, 0.5)
            put(fm.hedge(2 * i + 1, 2 * j), ce, 0.5)
            # parallel midlines of the two incident elements
            for jj in (2 * j + 1, 2 * j - 1):
                put(fm.hedge(2 * i, jj), ce, 0.25)
                put(fm.hedge(2 * i + 1, jj), ce, 0.25)
            ce = cm.vedge(i, j)
            put(fm.vedge(2 * i, 2 * j), ce, 0.5)
            put(fm.vedge(2 * i, 2 * j + 1), ce, 0.5)
            for ii in (2 * i + 1, 2 * i - 1):
                put(fm.vedge(ii, 2 * j), ce, 0.25)
                put(fm.vedge(ii, 2 * j + 1), ce, 0.25)
    return from_coo(rows, cols, vals, (fm.n_edges, cm.n_edges))


def _fe_prolongation_tri(cm, fm):
    H = cm.h
    entries = {}
    for b in range(cm.ny):
        for a in range(cm.nx):
            # coarse triangles of square (a,b), with geometry
            tris = []
            for verts, edges in _square_triangles(cm, a, b):
                pts = [cm.node_xy(v) for v in verts]
                tris.append((pts, edges))
            # fine edges of the four sub-squares
            fine_edges = set()
            for q in (2 * b, 2 * b + 1):
                for p in (2 * a, 2 * a + 1):
                    fine_edges.update([
                        fm.hedge_full(p, q), fm.hedge_full(p, q + 1),
                        fm.vedge_full(p, q), fm.vedge_full(p + 1, q),
                        fm.dedge_full(p, q),
                    ])
            for fe in fine_edges:
                t0 = fm.node_xy(fm.edge_tail_full[fe])
                t1 = fm.node_xy(fm.edge_head_full[fe])
                mid = 0.5 * (t0 + t1)
                tvec = t1 - t0
                # pick the lower-right coarse triangle when the midpoint lies
                # on or below the diagonal of square (a,b), else the upper-left
                xl, yl = mid[0] - a * H, mid[1] - b * H
                pts, edges = tris[0] if xl >= yl - 1e-12 else tris[1]
                lam = _tri_bary(*pts, mid)
                _, g = _tri_geometry(*pts)
                for ce, (la, lb) in edges:
                    w = lam[la] * g[lb] - lam[lb] * g[la]
                    entries[(fe, ce)] = float(w @ tvec)
    rows, cols, vals = [], [], []
    for (fe, ce), w in entries.items():
        fi = fm.int_of_full[fe]
        ci = cm.int_of_full[ce]
        if fi >= 0 and ci >= 0 and abs(w) > 1e-14:
            rows.append(fi)
            cols.append(ci)
            vals.append(w)
    return from_coo(rows, cols, vals, (fm.n_edges, cm.n_edges))


def _square_triangles(mesh, a, b):
    """The two triangles of square (a,b) of a TriMeshDirichlet."""
    p_ll = mesh.node_full(a, b)
    p_lr = mesh.node_full(a + 1, b)
    p_ur = mesh.node_full(a + 1, b + 1)
    p_ul = mesh.node_full(a, b + 1)
    yield (p_ll, p_lr, p_ur), [
        (mesh.hedge_full(a, b), (0, 1)),
        (mesh.vedge_full(a + 1, b), (1, 2)),
        (mesh.dedge_full(a, b), (0, 2)),
    ]
    yield (p_ll, p_ur, p_ul), [
        (mesh.dedge_full(a, b), (0, 1)),
        (mesh.hedge_full(a, b + 1), (2, 1)),
        (mesh.vedge_full(a, b), (0, 2)),
    ]


class StokesOperator:
    """Staggered-grid Stokes saddle system on a periodic n-by-n grid.

    Velocities live on the edges of the pressure-cell lattice (u_x between
    horizontally adjacent cells, u_y between vertically adjacent cells), so
    velocity DoFs reuse the QuadMeshPeriodic edge numbering and pressures the
    node numbering.  The assembled system is

        A = [[A_e, G/h], [G^T/h, 0]]

    with A_e the 5-point vector Laplacian (one scalar Laplacian per velocity
    component) and G the +-1 cell-to-face incidence.
    """

    def __init__(self, n):
        if n < 3:
            raise ValueError("stokes grid needs n >= 3")
        self.n = n
        self.h = 1.0 / n
        self.mesh = QuadMeshPeriodic(n, n)
        self.n_vel = 2 * n * n
        self.n_p = n * n
        self.n_dof = self.n_vel + self.n_p

        L = _lattice_laplacian(n, self.h)
        self.A_e = sp.block_diag([L, L], format="csr")
        self.G = self.mesh.gradient()
        A = sp.bmat([[self.A_e, self.G / self.h],
                     [self.G.T / self.h, None]], format="csr")
        A.sort_indices()
        self.A = A

    def nullspace(self):
        """Kernel of A: constant pressure and the two constant velocities."""
        n2 = self.n * self.n
        vecs = []
        for block in range(3):
            z = np.zeros(self.n_dof)
            if block < 2:
                z[block * n2:(block + 1) * n2] = 1.0
            else:
                z[self.n_vel:] = 1.0
            vecs.append(z)
        return vecs


def _lattice_laplacian(n, h):
    """Periodic 5-point Laplacian (1/h^2 scaling) on an n-by-n lattice."""
    e = np.arange(n * n)
    i, j = e % n, e // n
    rows = [e, e, e, e, e]
    cols = [e,
            j * n + (i + 1) % n, j * n + (i - 1) % n,
            ((j + 1) % n) * n + i, ((j - 1) % n) * n + i]
    vals = [np.full(e.size, 4.0 / h**2)] + [np.full(e.size, -1.0 / h**2)] * 4
    return from_coo(np.concatenate(rows), np.concatenate(cols),
                    np.concatenate(vals), (n * n, n * n))


def stokes_mac(n):
    return StokesOperator(n)
