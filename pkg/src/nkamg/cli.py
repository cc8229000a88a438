"""Experiment driver: sweep problem sizes and methods, emit CSV + a summary.

A run is described by a small ``key = value`` config file (``#`` starts a
comment)::

    family  = curlcurl_quad_periodic
    sizes   = 8x8, 16x16, 32x32
    methods = ours, classical_ideal, cr_only

``nkamg run config.txt`` assembles each size's operator once, runs every
requested method on it, writes one CSV per run (plus a separate
complexity file when the sparse Stokes variants are requested), and
prints a per-method summary with trends and divergence flags.

Families and their methods:

* ``curlcurl_quad_periodic`` / ``curlcurl_tri_dirichlet`` — ``ours``
  (near-kernel splitting + ideal interpolation, column ``P``),
  ``classical_ideal`` (column ``P_I0`` on the quad, ``P_classical_ideal``
  on the triangle family), ``geometric`` (geometric splitting on the
  quad; nested-mesh embedding on the triangle family, column
  ``Hiptmair``), ``cr_only`` (compatible-relaxation rho, column ``CR``),
  ``pcg`` / ``cg`` (iteration counts, columns ``step_pcg_P`` /
  ``step_cg``).
* ``stokes_mac`` — ``stokes_block`` (column ``ideal_P``),
  ``stokes_global`` (column ``geometric_P``), ``cr_only``, and
  ``stokes_sparse`` whose four variants land in their own CSV keyed by
  DoF count (columns ``no_P_smooth``, ``P_smooth``,
  ``diagonal_no_P_smooth``, ``diagonal_P_smooth``; a parenthesized
  subset such as ``stokes_sparse(no_P_smooth)`` selects variants).

The curl-curl files carry an always-empty ``optimal`` placeholder
column.  Every row records the config hash and the effective seed, and
re-running the same config byte-reproduces the CSV.  Stationary rates
use the symmetric two-grid cycle; the Krylov methods use the symmetrized
smoother in the preconditioner; sparse Stokes rates use three Vanka
sweeps per side, the block/global variants a single sweep.

Exit status: 0 on success, 1 when ``--check`` finds a flagged row
(divergence, error, or a rate/iteration threshold violation), 2 on a
config or I/O error.  The output directory is ``--out`` if given, else
``$NKAMG_OUT``, else the current directory.
"""

import argparse
import dataclasses
import hashlib
import os
import re
import sys

import numpy as np
import scipy.sparse as sp

from . import coarsen, cr, discretize, nearkernel, smoothers, solver, sparsela, stokes

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "main",
    "run_experiment",
    "validate_config",
]

_KRYLOV_MAX_ITER = 20000
_STATIONARY_MAX_ITER = 2000

SPARSE_VARIANTS = (
    ("no_P_smooth", False, 0),
    ("P_smooth", False, 1),
    ("diagonal_no_P_smooth", True, 0),
    ("diagonal_P_smooth", True, 1),
)
_SPARSE_BY_NAME = {name: (diag, rich) for name, diag, rich in SPARSE_VARIANTS}

_METHODS_BY_FAMILY = {
    "curlcurl_quad_periodic": ("ours", "classical_ideal", "geometric",
                               "cr_only", "pcg", "cg"),
    "curlcurl_tri_dirichlet": ("ours", "classical_ideal", "geometric",
                               "cr_only", "pcg", "cg"),
    "stokes_mac": ("stokes_block", "stokes_global", "cr_only",
                   "stokes_sparse"),
}

_COLUMN_BY_METHOD = {
    "curlcurl_quad_periodic": {"ours": "P", "classical_ideal": "P_I0",
                               "geometric": "geometric", "cr_only": "CR",
                               "pcg": "step_pcg_P", "cg": "step_cg"},
    "curlcurl_tri_dirichlet": {"ours": "P",
                               "classical_ideal": "P_classical_ideal",
                               "geometric": "Hiptmair", "cr_only": "CR",
                               "pcg": "step_pcg_P", "cg": "step_cg"},
    "stokes_mac": {"stokes_block": "ideal_P", "stokes_global": "geometric_P",
                   "cr_only": "CR"},
}

# fixed left-to-right column order for whatever subset a run produces
_COLUMN_ORDER = (
    "size", "Dof", "P", "CR", "optimal", "P_I0", "P_classical_ideal",
    "geometric", "Hiptmair", "step_pcg_P", "step_cg", "ideal_P",
    "geometric_P", "no_P_smooth", "P_smooth", "diagonal_no_P_smooth",
    "diagonal_P_smooth", "status", "config_hash", "seed",
)

_KNOWN_KEYS = ("family", "sizes", "methods", "beta", "tol", "seed", "omega",
               "symmetrize", "theta", "m", "eps")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configs."""


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description with defaults filled in.

    ``methods`` holds (name, variant-tuple) pairs; the variant tuple is
    empty except for ``stokes_sparse``, where it lists the selected
    sparse-variant column names.  ``symmetrize = None`` means the family
    default (symmetrized composite smoother on the periodic quad family,
    plain on the triangle family); ``m = None`` and ``eps = None``
    likewise defer to the family default corridor radius and the
    mass-based detection threshold.
    """

    family: str
    sizes: tuple
    methods: tuple
    beta: float = 0.01
    tol: float = 1e-6
    seed: int = 99
    omega: float = 0.5
    symmetrize: bool = None
    theta: float = 0.25
    m: int = None
    eps: float = None

    @property
    def config_hash(self):
        """Short digest of every field, recorded in each CSV row."""
        canon = "|".join([
            self.family,
            ";".join(f"{nx}x{ny}" for nx, ny in self.sizes),
            ";".join(name + ("(" + ",".join(args) + ")" if args else "")
                     for name, args in self.methods),
            repr(self.beta), repr(self.tol), repr(self.seed),
            repr(self.omega), repr(self.symmetrize), repr(self.theta),
            repr(self.m), repr(self.eps),
        ])
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


@dataclasses.dataclass
class ExperimentReport:
    """What a run produced: CSV paths, printable summary, flagged rows."""

    paths: list
    summary: str
    flags: list


def _split_top_level(text):
    """Split on commas that are not inside parentheses."""
    parts, cur, depth = [], [], 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced ')'")
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ValueError("unbalanced '('")
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _parse_size(token, ln):
    m = re.fullmatch(r"(\d+)(?:\s*x\s*(\d+))?", token)
    if m is None:
        raise ConfigError(f"line {ln}: malformed size {token!r} "
                          "(expected like '8x8')")
    nx = int(m.group(1))
    ny = int(m.group(2)) if m.group(2) else nx
    if nx < 2 or ny < 2:
        raise ConfigError(f"line {ln}: size {token!r} too small "
                          "(need at least 2x2)")
    return nx, ny


def _parse_method(token, ln):
    m = re.fullmatch(r"(\w+)\s*(?:\((.*)\))?", token)
    if m is None or not m.group(1):
        raise ConfigError(f"line {ln}: malformed method {token!r}")
    name, argstr = m.group(1), m.group(2)
    if name == "stokes_sparse":
        if argstr is None or not argstr.strip():
            args = tuple(v for v, _, _ in SPARSE_VARIANTS)
        else:
            args = tuple(a.strip() for a in argstr.split(","))
            for a in args:
                if a not in _SPARSE_BY_NAME:
                    raise ConfigError(
                        f"line {ln}: unknown sparse variant {a!r} "
                        f"(choose from {', '.join(_SPARSE_BY_NAME)})")
        return name, args
    if argstr is not None:
        raise ConfigError(f"line {ln}: method {name!r} takes no arguments")
    return name, ()


def _parse_float(val, key, ln, positive=True):
    try:
        x = float(val)
    except ValueError:
        raise ConfigError(f"line {ln}: malformed value for {key!r}: {val!r}")
    if positive and not x > 0:
        raise ConfigError(f"line {ln}: {key} must be positive, got {val}")
    return x


def _parse_int(val, key, ln, minimum=0):
    try:
        x = int(val)
    except ValueError:
        raise ConfigError(f"line {ln}: malformed value for {key!r}: {val!r}")
    if x < minimum:
        raise ConfigError(f"line {ln}: {key} must be >= {minimum}, got {val}")
    return x


def _parse_bool(val, key, ln):
    low = val.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"line {ln}: malformed value for {key!r}: {val!r}")


def validate_config(text):
    """Parse ``key = value`` config text into an ExperimentConfig.

    One assignment per line, ``#`` comments, comma-separated lists;
    unknown or duplicate keys, malformed values, and cross-field
    inconsistencies (method not in the family, non-square Stokes sizes,
    odd sizes with the nested geometric method) all raise ConfigError
    with the offending line number.
    """
    values, where = {}, {}
    raw_lines = text.splitlines()
    for ln, raw in enumerate(raw_lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', "
                              f"got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        if not val:
            raise ConfigError(f"line {ln}: empty value for {key!r}")
        values[key], where[key] = val, ln
    end = len(raw_lines) + 1

    for key in ("family", "sizes", "methods"):
        if key not in values:
            raise ConfigError(f"line {end}: missing required key {key!r}")
    family = values["family"]
    if family not in _METHODS_BY_FAMILY:
        raise ConfigError(
            f"line {where['family']}: unknown family {family!r} "
            f"(choose from {', '.join(_METHODS_BY_FAMILY)})")

    ln = where["sizes"]
    sizes = tuple(_parse_size(tok, ln)
                  for tok in _split_top_level(values["sizes"]) if tok)
    if not sizes:
        raise ConfigError(f"line {ln}: sizes must be nonempty")

    ln = where["methods"]
    try:
        tokens = [t for t in _split_top_level(values["methods"]) if t]
    except ValueError as exc:
        raise ConfigError(f"line {ln}: {exc}")
    methods = tuple(_parse_method(tok, ln) for tok in tokens)
    if not methods:
        raise ConfigError(f"line {ln}: methods must be nonempty")
    seen = set()
    for name, _ in methods:
        if name in seen:
            raise ConfigError(f"line {ln}: duplicate method {name!r}")
        seen.add(name)
        if name not in _METHODS_BY_FAMILY[family]:
            raise ConfigError(f"line {ln}: method {name!r} not available "
                              f"for family {family!r}")

    cfg = ExperimentConfig(
        family=family, sizes=sizes, methods=methods,
        beta=_parse_float(values["beta"], "beta", where["beta"])
        if "beta" in values else 0.01,
        tol=_parse_float(values["tol"], "tol", where["tol"])
        if "tol" in values else 1e-6,
        seed=_parse_int(values["seed"], "seed", where["seed"])
        if "seed" in values else 99,
        omega=_parse_float(values["omega"], "omega", where["omega"])
        if "omega" in values else 0.5,
        symmetrize=_parse_bool(values["symmetrize"], "symmetrize",
                               where["symmetrize"])
        if "symmetrize" in values else None,
        theta=_parse_float(values["theta"], "theta", where["theta"])
        if "theta" in values else 0.25,
        m=_parse_int(values["m"], "m", where["m"], minimum=1)
        if "m" in values else None,
        eps=_parse_float(values["eps"], "eps", where["eps"])
        if "eps" in values else None,
    )

    if family == "stokes_mac":
        for nx, ny in sizes:
            if nx != ny:
                raise ConfigError(f"line {where['sizes']}: the staggered "
                                  f"Stokes mesh is square; got {nx}x{ny}")
    if family == "curlcurl_tri_dirichlet" and "geometric" in seen:
        for nx, ny in sizes:
            if nx % 2 or ny % 2:
                raise ConfigError(
                    f"line {where['sizes']}: the nested geometric method "
                    f"needs even sizes (factor-2 coarse mesh); got {nx}x{ny}")
    return cfg


def load_config(path):
    """Read and validate a config file."""
    with open(path, encoding="utf-8") as f:
        return validate_config(f.read())


# ----------------------------------------------------------------------
# per-size pipeline contexts (build each operator once, share across
# methods)


class _CurlContext:
    """Lazily built curl-curl pipeline pieces for one mesh size."""

    def __init__(self, cfg, nx, ny):
        self.cfg = cfg
        self.tri = cfg.family == "curlcurl_tri_dirichlet"
        make = (discretize.tri_mesh_dirichlet if self.tri
                else discretize.quad_mesh_periodic)
        self.mesh = make(nx, ny)
        self.op = discretize.curl_curl(self.mesh, cfg.beta)
        self.nx, self.ny = nx, ny
        self._cache = {}

    def smoother(self, symmetrize):
        key = ("sm", symmetrize)
        if key not in self._cache:
            self._cache[key] = smoothers.composite_edge_smoother(
                self.op.A, self.mesh.gradient(), omega=self.cfg.omega,
                symmetrize=symmetrize)
        return self._cache[key]

    def rate_smoother(self):
        symm = self.cfg.symmetrize
        if symm is None:
            symm = not self.tri
        return self.smoother(symm)

    def rhs(self):
        if "rhs" not in self._cache:
            self._cache["rhs"] = solver.random_rhs(self.op.A.shape[0],
                                                   self.cfg.seed)
        return self._cache["rhs"]

    def ours(self):
        """Near-kernel detection, splitting basis, and ideal P."""
        if "ours" not in self._cache:
            cfg, op = self.cfg, self.op
            eps = cfg.eps
            if eps is None:
                eps = nearkernel.mass_threshold(op.mass, op.beta)
            m = cfg.m if cfg.m is not None else (3 if self.tri else 2)
            nk = nearkernel.detect_near_kernel(op.A, eps, m=m)
            A_N = sparsela.sptriple(nk.N.T.tocsr(), op.A, nk.N)
            cf = coarsen.cf_split(A_N, theta=cfg.theta, mode="abs")
            sb = coarsen.form_split_basis(A_N, nk.N, cf, theta=cfg.theta,
                                          mode="abs")
            P = coarsen.ideal_interpolation(op.A, sb.R, sb.S)
            self._cache["ours"] = (P, sb)
        return self._cache["ours"]

    def two_grid(self, P):
        return solver.TwoGrid(self.op.A, P, self.rate_smoother())


class _StokesContext:
    """Lazily built Stokes pipeline pieces for one mesh size."""

    def __init__(self, cfg, n):
        self.cfg = cfg
        self.st = discretize.stokes_mac(n)
        self.null = self.st.nullspace()
        self._cache = {}

    def vanka(self):
        if "vanka" not in self._cache:
            self._cache["vanka"] = smoothers.Schwarz(
                self.st.A, stokes.vanka_patches(self.st))
        return self._cache["vanka"]

    def vanka3(self):
        if "vanka3" not in self._cache:
            v = self.vanka()
            self._cache["vanka3"] = smoothers.Composite([v, v, v])
        return self._cache["vanka3"]

    def rhs(self):
        """Random RHS projected off the nullspace of the saddle system."""
        if "rhs" not in self._cache:
            Q = solver.orthonormal_columns(self.null)
            b = solver.random_rhs(self.st.A.shape[0], self.cfg.seed)
            self._cache["rhs"] = b - Q @ (Q.T @ b)
        return self._cache["rhs"]

    def two_grid(self, P, sweeps=1):
        sm = self.vanka3() if sweeps == 3 else self.vanka()
        return solver.TwoGrid(self.st.A, P, sm, nullspace=self.null)


# ----------------------------------------------------------------------
# measurements


@dataclasses.dataclass
class _Cell:
    """One measured CSV cell plus everything the summary needs."""

    column: str
    text: str
    value: float = None
    kind: str = "rate"          # rate | iters | rho | complexity
    flag: str = None            # reason string when thresholded/diverged


def _rate_cell(column, result, cap=None):
    flag = None
    if result.diverged:
        flag = "diverged"
    elif cap is not None and result.rate >= cap:
        flag = f"rate {result.rate:.3f} >= {cap}"
    return _Cell(column, f"{result.rate:.6f}", result.rate, "rate", flag)


def _measure_stationary(tg, A, b, tol):
    return solver.measure_rate(tg.sym_step, A, b, tol=tol,
                               max_iter=_STATIONARY_MAX_ITER)


def _run_curl_method(ctx, name, cfg):
    """Run one curl-curl method on one size; returns a list of cells."""
    col = _COLUMN_BY_METHOD[cfg.family][name]
    op = ctx.op
    if name == "ours":
        P, _ = ctx.ours()
        tg = ctx.two_grid(P)
        res = _measure_stationary(tg, op.A, tg.project(ctx.rhs()), cfg.tol)
        cap = 0.7 if not ctx.tri else 0.99
        return [_rate_cell(col, res, cap)]
    if name == "classical_ideal":
        cf = coarsen.cf_split(op.A, theta=cfg.theta)
        P = coarsen.classical_ideal_interpolation(op.A, cf)
        tg = ctx.two_grid(P)
        res = _measure_stationary(tg, op.A, tg.project(ctx.rhs()), cfg.tol)
        return [_rate_cell(col, res)]        # degradation expected: no cap
    if name == "geometric":
        if ctx.tri:
            coarse = discretize.tri_mesh_dirichlet(ctx.nx // 2, ctx.ny // 2)
            P = coarsen.geometric_interpolation(coarse, ctx.mesh)
        else:
            gb = coarsen.geometric_split(ctx.mesh)
            P = coarsen.ideal_interpolation(op.A, gb.R, gb.S)
        tg = ctx.two_grid(P)
        res = _measure_stationary(tg, op.A, tg.project(ctx.rhs()), cfg.tol)
        return [_rate_cell(col, res, cap=1.0)]
    if name == "cr_only":
        _, sb = ctx.ours()
        res = cr.cr_rate(op.A, sb.S, "habituated", ctx.rate_smoother())
        flag = f"rho {res.rate:.3f} >= 1" if res.rate >= 1.0 else None
        return [_Cell(col, f"{res.rate:.6f}", res.rate, "rho", flag)]
    if name == "pcg":
        P, _ = ctx.ours()
        tg = solver.TwoGrid(op.A, P, ctx.smoother(True))
        _, res = solver.pcg(op.A, ctx.rhs(), tg.preconditioner, tol=cfg.tol,
                            max_iter=_KRYLOV_MAX_ITER)
        flag = None if res.converged else "not converged"
        return [_Cell(col, str(res.iterations), float(res.iterations),
                      "iters", flag)]
    if name == "cg":
        _, res = solver.cg(op.A, ctx.rhs(), tol=cfg.tol,
                           max_iter=_KRYLOV_MAX_ITER)
        return [_Cell(col, str(res.iterations), float(res.iterations),
                      "iters", None)]
    raise ValueError(f"unknown method {name!r}")


def _run_stokes_method(ctx, name, args, cfg):
    """Run one Stokes method on one size; returns a list of cells."""
    st = ctx.st
    if name == "stokes_block":
        P, _, _ = stokes.block_interpolation(st)
        tg = ctx.two_grid(P)
        res = _measure_stationary(tg, st.A, ctx.rhs(), cfg.tol)
        return [_rate_cell("ideal_P", res, cap=1.0)]
    if name == "stokes_global":
        P = stokes.global_ideal_interpolation(st)
        tg = ctx.two_grid(P)
        res = _measure_stationary(tg, st.A, ctx.rhs(), cfg.tol)
        return [_rate_cell("geometric_P", res, cap=1.0)]
    if name == "cr_only":
        vb, cfn = stokes.nodal_split(st)
        fidx = np.nonzero(~cfn)[0]
        S_p = sparsela.from_coo(fidx, np.arange(fidx.size),
                                np.ones(fidx.size), (st.n_p, fidx.size))
        S = sp.block_diag([vb.S, S_p], format="csr")
        res = cr.cr_rate(st.A, S, "habituated", ctx.vanka())
        flag = f"rho {res.rate:.3f} >= 1" if res.rate >= 1.0 else None
        return [_Cell("CR", f"{res.rate:.6f}", res.rate, "rho", flag)]
    if name == "stokes_sparse":
        cells = []
        for variant in args:
            diag, rich = _SPARSE_BY_NAME[variant]
            P, info = stokes.sparse_interpolation(st, diagonal=diag,
                                                  richardson_steps=rich)
            tg = ctx.two_grid(P, sweeps=3)
            res = _measure_stationary(tg, st.A, ctx.rhs(), cfg.tol)
            flag = None
            if res.diverged:
                flag = "diverged"
            elif res.rate >= 0.4:
                flag = f"rate {res.rate:.3f} >= 0.4"
            cells.append(_Cell(variant, f"{info['complexity']:.6f}",
                               info["complexity"], "complexity", flag))
        return cells
    raise ValueError(f"unknown method {name!r}")


# ----------------------------------------------------------------------
# run + report


def _columns_for(cfg, sparse):
    """CSV header for the main (or sparse) file of this config."""
    cols = set()
    if sparse:
        cols.add("Dof")
        for name, args in cfg.methods:
            if name == "stokes_sparse":
                cols.update(args)
    else:
        cols.add("size")
        if cfg.family != "stokes_mac":
            cols.add("optimal")
        for name, _ in cfg.methods:
            if name != "stokes_sparse":
                cols.add(_COLUMN_BY_METHOD[cfg.family][name])
    cols.update(("status", "config_hash", "seed"))
    return [c for c in _COLUMN_ORDER if c in cols]


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(row.get(c, "") for c in columns) + "\n")


def _trend(values, kind):
    if len(values) < 2:
        return ""
    pairs = list(zip(values, values[1:]))
    if max(values) == min(values):
        word = "flat"
    elif all(b > a for a, b in pairs):
        word = "increasing"
    elif all(b < a for a, b in pairs):
        word = "decreasing"
    elif kind in ("rate", "rho") and max(values) - min(values) <= 0.05:
        word = "flat"
    else:
        word = "mixed"
    return f"  [{word}]"


def run_experiment(cfg, out_dir="."):
    """Run every size x method cell of ``cfg`` and write the CSV file(s).

    Each size's operator is assembled once and shared by its methods; a
    method that raises records its exception class in the row's status
    cell and the run continues.  Returns an ExperimentReport with the
    written paths, a printable summary (per-method values across sizes,
    trend word, and any flags), and the list of flagged cells.
    """
    main_rows, sparse_rows, flags = [], [], []
    series = {}           # column -> (kind, list of (size label, value))
    has_sparse = any(name == "stokes_sparse" for name, _ in cfg.methods)
    has_main = any(name != "stokes_sparse" for name, _ in cfg.methods)
    provenance = {"config_hash": cfg.config_hash, "seed": str(cfg.seed)}

    for nx, ny in cfg.sizes:
        label = f"{nx}x{ny}"
        if cfg.family == "stokes_mac":
            ctx = _StokesContext(cfg, nx)
        else:
            ctx = _CurlContext(cfg, nx, ny)
        main_row = {"size": label, **provenance}
        sparse_row = dict(provenance)
        if cfg.family == "stokes_mac":
            sparse_row["Dof"] = str(ctx.st.A.shape[0])
        main_status, sparse_status = [], []
        row_cells = {}
        for name, args in cfg.methods:
            to_sparse = name == "stokes_sparse"
            try:
                if cfg.family == "stokes_mac":
                    cells = _run_stokes_method(ctx, name, args, cfg)
                else:
                    cells = _run_curl_method(ctx, name, cfg)
            except Exception as exc:
                reason = f"{name}={type(exc).__name__}"
                (sparse_status if to_sparse else main_status).append(reason)
                flags.append(f"size {label} {name}: error "
                             f"{type(exc).__name__}")
                continue
            for cell in cells:
                target = sparse_row if to_sparse else main_row
                target[cell.column] = cell.text
                row_cells[cell.column] = cell
                series.setdefault(cell.column, (cell.kind, []))[1].append(
                    (label, cell.value))
                if cell.flag:
                    flags.append(f"size {label} {cell.column}: {cell.flag}")
        pcg_cell = row_cells.get("step_pcg_P")
        cg_cell = row_cells.get("step_cg")
        if pcg_cell and cg_cell and pcg_cell.value >= cg_cell.value:
            flags.append(f"size {label} step_pcg_P: {pcg_cell.text} "
                         f"iterations >= cg {cg_cell.text}")
        main_row["status"] = ";".join(main_status) if main_status else "ok"
        sparse_row["status"] = (";".join(sparse_status) if sparse_status
                                else "ok")
        main_rows.append(main_row)
        sparse_rows.append(sparse_row)

    paths = []
    if has_main:
        path = os.path.join(out_dir, f"{cfg.family}.csv")
        _write_csv(path, _columns_for(cfg, sparse=False), main_rows)
        paths.append(path)
    if has_sparse:
        path = os.path.join(out_dir, f"{cfg.family}_sparse.csv")
        _write_csv(path, _columns_for(cfg, sparse=True), sparse_rows)
        paths.append(path)

    lines = [f"family {cfg.family}  seed {cfg.seed}  "
             f"config {cfg.config_hash}",
             "sizes: " + "  ".join(f"{nx}x{ny}" for nx, ny in cfg.sizes)]
    for col in _COLUMN_ORDER:
        if col not in series:
            continue
        kind, pts = series[col]
        vals = [v for _, v in pts if v is not None]
        if kind == "iters":
            shown = "  ".join(f"{int(v)}" for _, v in pts)
        else:
            shown = "  ".join(f"{v:.3f}" for _, v in pts)
        lines.append(f"{col:<22} ({kind}): {shown}{_trend(vals, kind)}")
    if flags:
        lines.append("flags:")
        lines.extend(f"  {f}" for f in flags)
    else:
        lines.append("flags: none")
    return ExperimentReport(paths=paths, summary="\n".join(lines),
                            flags=flags)


def main(argv=None):
    """Entry point for the ``nkamg`` command."""
    parser = argparse.ArgumentParser(
        prog="nkamg",
        description="Two-grid experiment driver: run a config, emit CSV "
                    "and a summary.")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run an experiment config file")
    runp.add_argument("config", help="path to a 'key = value' config file")
    runp.add_argument("--out", default=None,
                      help="output directory (default: $NKAMG_OUT or '.')")
    runp.add_argument("--check", action="store_true",
                      help="exit nonzero if any row is flagged (divergence, "
                           "error, or threshold violation)")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config seed")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)

    out_dir = args.out or os.environ.get("NKAMG_OUT") or "."
    os.makedirs(out_dir, exist_ok=True)
    report = run_experiment(cfg, out_dir)
    print(report.summary)
    for path in report.paths:
        print(f"wrote {path}")
    if args.check and report.flags:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
