"""Monolithic nonlinear solver for the coupled problem.

The unknown vector stacks [free-flow cell pressures | u faces | v faces |
porous vertex pressures]; Dirichlet-pinned entries are excluded and read
from templates.  The Jacobian is assembled by forward finite differences
of the residual with stencil-aware coloring: free-flow columns are colored
by 3x3 (velocities) / 2x2 (pressures) index tiles, porous columns by a
greedy pass over their true conflict graph, and the resulting coloring is
verified against the sparsity pattern before use.  The sparse linear
systems go through SuperLU.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConvergenceError, SolverError

_FD_EPS = 1e-8  # forward-difference step scale: eps = 1e-8 max(1, |u|)


@dataclass
class NewtonConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_iter: int = 25
    line_search: bool = False
    equilibrate: bool = False  # optional row scaling of the linear systems

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_iter < 1:
            raise ValueError("tolerances must be positive, max_iter >= 1")


@dataclass
class NewtonReport:
    converged: bool = False
    iterations: int = 0
    residual_norms: list = field(default_factory=list)
    update_norms: list = field(default_factory=list)

    def csv_lines(self):
        out = ["iteration,residual_norm,update_norm"]
        for k, rn in enumerate(self.residual_norms):
            un = self.update_norms[k] if k < len(self.update_norms) else ""
            out.append(f"{k},{rn!r},{un!r}")
        return out


class DofLayout:
    """Global index maps between field arrays and the unknown vector."""

    def __init__(self, grid, u_unknown, v_unknown, pm_unknown):
        self.grid = grid
        self.p_mask = grid.active
        self.u_mask = u_unknown
        self.v_mask = v_unknown
        self.pm_mask = pm_unknown

        self.p_pos = np.nonzero(self.p_mask.ravel())[0]
        self.u_pos = np.nonzero(self.u_mask.ravel())[0]
        self.v_pos = np.nonzero(self.v_mask.ravel())[0]
        self.pm_pos = np.nonzero(self.pm_mask)[0]
        self.n_p = len(self.p_pos)
        self.n_u = len(self.u_pos)
        self.n_v = len(self.v_pos)
        self.n_pm = len(self.pm_pos)
        self.n_dofs = self.n_p + self.n_u + self.n_v + self.n_pm
        self.off_u = self.n_p
        self.off_v = self.n_p + self.n_u
        self.off_pm = self.n_p + self.n_u + self.n_v

        def inverse(mask_flat, pos, off):
            gid = np.full(mask_flat.size, -1, dtype=int)
            gid[pos] = off + np.arange(len(pos))
            return gid

        self.p_gid = inverse(self.p_mask.ravel(), self.p_pos, 0)
        self.u_gid = inverse(self.u_mask.ravel(), self.u_pos, self.off_u)
        self.v_gid = inverse(self.v_mask.ravel(), self.v_pos, self.off_v)
        self.pm_gid = inverse(self.pm_mask, self.pm_pos, self.off_pm)

    def split(self, x):
        return (x[:self.off_u], x[self.off_u:self.off_v],
                x[self.off_v:self.off_pm], x[self.off_pm:])


class CoupledProblem:
    """Residual + Jacobian for the monolithic free-flow/porous system."""

    def __init__(self, ff_assembler, pm_assembler=None, coupling=None,
                 grid=None):
        self.ff = ff_assembler
        self.pm = pm_assembler
        self.coupling = coupling
        self.grid = grid if grid is not None else ff_assembler.grid

        pm_unknown = np.zeros(0, dtype=bool)
        if pm_assembler is not None:
            pm_unknown = ~pm_assembler.dirichlet_mask
        self.layout = DofLayout(self.grid, ff_assembler.u_unknown,
                                ff_assembler.v_unknown, pm_unknown)
        self._pattern = None
        self._colors = None

    # -- state handling ------------------------------------------------------

    def initial_state(self):
        return np.zeros(self.layout.n_dofs)

    def expand(self, x):
        """Unknown vector -> full field arrays (U, V, P, phat)."""
        lo = self.layout
        xp, xu, xv, xpm = lo.split(x)
        P = np.zeros(self.grid.nx * self.grid.ny)
        P[lo.p_pos] = xp
        U = self.ff.u_template.copy().ravel()
        U[lo.u_pos] = xu
        V = self.ff.v_template.copy().ravel()
        V[lo.v_pos] = xv
        if self.pm is not None:
            phat = self.pm.dirichlet_values.copy()
            phat[lo.pm_pos] = xpm
        else:
            phat = np.zeros(0)
        return (U.reshape(self.grid.nx + 1, self.grid.ny),
                V.reshape(self.grid.nx, self.grid.ny + 1),
                P.reshape(self.grid.nx, self.grid.ny), phat)

    def inject(self, U, V, P, phat=None):
        """Full field arrays -> unknown vector (e.g. exact-solution states)."""
        lo = self.layout
        parts = [P.ravel()[lo.p_pos], U.ravel()[lo.u_pos], V.ravel()[lo.v_pos]]
        if self.pm is not None:
            parts.append(np.asarray(phat)[lo.pm_pos])
        return np.concatenate(parts)

    # -- residual -------------------------------------------------------------

    def residual(self, x):
        U, V, P, phat = self.expand(x)
        tr_u = tr_v = None
        vertex_flux = None
        if self.coupling is not None:
            tr_u, tr_v = self.coupling.tractions(phat)
            vertex_flux = self.coupling.pm_vertex_flux(U, V)
        R_p, R_u, R_v = self.ff.residual(U, V, P, tr_u, tr_v)
        lo = self.layout
        parts = [R_p.ravel()[lo.p_pos], R_u.ravel()[lo.u_pos],
                 R_v.ravel()[lo.v_pos]]
        if self.pm is not None:
            r_pm = self.pm.residual(phat, vertex_flux)
            parts.append(r_pm[lo.pm_pos])
        r = np.concatenate(parts)
        if not np.isfinite(r).all():
            bad = int(np.nonzero(~np.isfinite(r))[0][0])
            raise SolverError(f"non-finite residual entry at dof {bad}")
        return r

    # -- sparsity pattern ------------------------------------------------------

    def jacobian_pattern(self):
        """COO row/col arrays of a superset of the true sparsity."""
        if self._pattern is not None:
            return self._pattern
        lo = self.layout
        grid = self.grid
        nx, ny = grid.nx, grid.ny
        rows, cols = [], []

        def add(r, c):
            rows.append(r)
            cols.append(c)

        ug = lo.u_gid.reshape(nx + 1, ny)
        vg = lo.v_gid.reshape(nx, ny + 1)
        pg = lo.p_gid.reshape(nx, ny)

        # mass rows: the four faces of each active cell
        for i, j in zip(*np.nonzero(grid.active)):
            r = pg[i, j]
            for c in (ug[i, j], ug[i + 1, j], vg[i, j], vg[i, j + 1]):
                if c >= 0:
                    add(r, c)

        cpl = self.coupling

        def pm_cols_of_face(kind, i, j):
            if cpl is None:
                return []
            slot = cpl.u_slot if kind == "u" else cpl.v_slot
            s = slot[i, j]
            if s < 0:
                return []
            pi_l2 = cpl.pi_u_l2 if kind == "u" else cpl.pi_v_l2
            pi_a = cpl.pi_u_area if kind == "u" else cpl.pi_v_area
            out = set()
            for m in (pi_l2, pi_a):
                out.update(int(c) for c in m[s].indices)
            return [lo.pm_gid[c] for c in out if lo.pm_gid[c] >= 0]

        # u rows: own-field 9-point, corner v, adjacent p, coupled pm vertices
        for i, j in zip(*np.nonzero(self.ff.u_unknown)):
            r = ug[i, j]
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii <= nx and 0 <= jj < ny and ug[ii, jj] >= 0:
                        add(r, ug[ii, jj])
            for ii in (i - 1, i):
                for jj in (j, j + 1):
                    if 0 <= ii < nx and vg[ii, jj] >= 0:
                        add(r, vg[ii, jj])
            for ii in (i - 1, i):
                if 0 <= ii < nx and pg[ii, j] >= 0:
                    add(r, pg[ii, j])
            for c in pm_cols_of_face("u", i, j):
                add(r, c)

        # v rows (mirror)
        for i, j in zip(*np.nonzero(self.ff.v_unknown)):
            r = vg[i, j]
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < nx and 0 <= jj <= ny and vg[ii, jj] >= 0:
                        add(r, vg[ii, jj])
            for ii in (i, i + 1):
                for jj in (j - 1, j):
                    if 0 <= jj < ny and ug[ii, jj] >= 0:
                        add(r, ug[ii, jj])
            for jj in (j - 1, j):
                if 0 <= jj < ny and pg[i, jj] >= 0:
                    add(r, pg[i, jj])
            for c in pm_cols_of_face("v", i, j):
                add(r, c)

        # pm rows: element neighbors plus coupled ff faces
        if self.pm is not None:
            nbrs = self.pm.vertex_neighbors()
            face_cols = [[] for _ in range(self.pm.n_vertices)]
            if cpl is not None:
                for g in cpl.facets:
                    gid = ug[g.ff_i, g.ff_j] if g.ff_kind == "u" \
                        else vg[g.ff_i, g.ff_j]
                    if gid >= 0:
                        face_cols[g.pm_vertex].append(gid)
            for v in range(self.pm.n_vertices):
                r = lo.pm_gid[v]
                if r < 0:
                    continue
                for w in nbrs[v]:
                    if lo.pm_gid[w] >= 0:
                        add(r, lo.pm_gid[w])
                for c in face_cols[v]:
                    add(r, c)

        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        keep = np.ones(len(rows), dtype=bool)
        keep[1:] = (np.diff(rows) != 0) | (np.diff(cols) != 0)
        self._pattern = (rows[keep], cols[keep])
        return self._pattern

    # -- coloring ---------------------------------------------------------------

    def coloring(self):
        """Column color ids such that no two same-color columns share a row."""
        if self._colors is not None:
            return self._colors
        lo = self.layout
        nx, ny = self.grid.nx, self.grid.ny
        colors = np.zeros(lo.n_dofs, dtype=int)

        ii, jj = np.unravel_index(lo.p_pos, (nx, ny))
        colors[:lo.off_u] = (ii % 2) * 2 + (jj % 2)
        base = 4
        ii, jj = np.unravel_index(lo.u_pos, (nx + 1, ny))
        colors[lo.off_u:lo.off_v] = base + (ii % 3) * 3 + (jj % 3)
        base += 9
        ii, jj = np.unravel_index(lo.v_pos, (nx, ny + 1))
        colors[lo.off_v:lo.off_pm] = base + (ii % 3) * 3 + (jj % 3)
        base += 9

        if lo.n_pm:
            rows, cols = self.jacobian_pattern()
            a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)),
                              shape=(lo.n_dofs, lo.n_dofs))
            b = a[:, lo.off_pm:].tocsc()
            conflict = (b.T @ b).tolil()
            pm_colors = np.full(lo.n_pm, -1, dtype=int)
            for v in range(lo.n_pm):
                taken = {pm_colors[w] for w in conflict.rows[v] if w < v}
                c = 0
                while c in taken:
                    c += 1
                pm_colors[v] = c
            colors[lo.off_pm:] = base + pm_colors
            base += pm_colors.max() + 1

        self._verify_coloring(colors)
        self._colors = colors
        self._ncolors = base
        return colors

    def _verify_coloring(self, colors):
        rows, cols = self.jacobian_pattern()
        key = rows * (colors.max() + 1) + colors[cols]
        if len(np.unique(key)) != len(key):
            raise SolverError("coloring conflicts with the sparsity pattern")

    # -- Jacobian ---------------------------------------------------------------

    def assemble(self, x):
        """Residual and forward-difference Jacobian at x."""
        r0 = self.residual(x)
        rows, cols = self.jacobian_pattern()
        colors = self.coloring()
        vals = np.zeros(len(rows))
        col_color = colors[cols]
        eps = _FD_EPS * np.maximum(1.0, np.abs(x))
        order = np.argsort(col_color, kind="stable")
        sorted_rows = rows[order]
        sorted_cols = cols[order]
        bounds = np.searchsorted(col_color[order], np.arange(self._ncolors + 1))
        for c in range(self._ncolors):
            lo_b, hi_b = bounds[c], bounds[c + 1]
            if lo_b == hi_b:
                continue
            members = np.unique(sorted_cols[lo_b:hi_b])
            xp = x.copy()
            xp[members] += eps[members]
            dr = self.residual(xp) - r0
            seg_rows = sorted_rows[lo_b:hi_b]
            seg_cols = sorted_cols[lo_b:hi_b]
            vals[order[lo_b:hi_b]] = dr[seg_rows] / eps[seg_cols]
        jac = sp.csr_matrix((vals, (rows, cols)),
                            shape=(self.layout.n_dofs, self.layout.n_dofs))
        return r0, jac


# ---------------------------------------------------------------------------
# linear and nonlinear solvers
# ---------------------------------------------------------------------------


def linear_solve(A, b):
    """Sparse direct solve with a residual check (SuperLU)."""
    A = sp.csc_matrix(A)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise SolverError(f"system not square: {A.shape}")
    empty_rows = np.nonzero(np.diff(sp.csr_matrix(A).indptr) == 0)[0]
    if len(empty_rows):
        raise SolverError(f"structurally singular: empty row {empty_rows[0]}")
    empty_cols = np.nonzero(np.diff(A.indptr) == 0)[0]
    if len(empty_cols):
        raise SolverError(f"structurally singular: empty column {empty_cols[0]}")
    try:
        lu = spla.splu(A)
        x = lu.solve(b)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    bn = np.linalg.norm(b)
    if bn > 0:
        res = np.linalg.norm(A @ x - b) / bn
        if res > 1e-10:
            x = x + lu.solve(b - A @ x)  # one step of iterative refinement
            res = np.linalg.norm(A @ x - b) / bn
            if res > 1e-10:
                raise SolverError(f"linear solve residual {res:.2e} > 1e-10")
    if not np.isfinite(x).all():
        bad = int(np.nonzero(~np.isfinite(x))[0][0])
        raise SolverError(f"linear solve produced non-finite entry at dof {bad}")
    return x


def newton_solve(problem: CoupledProblem, x0=None, config: NewtonConfig = None):
    """Newton iteration; returns (state, report)."""
    cfg = config or NewtonConfig()
    x = problem.initial_state() if x0 is None else np.array(x0, dtype=float)
    report = NewtonReport()
    r = problem.residual(x)
    norm0 = np.linalg.norm(r)
    report.residual_norms.append(norm0)
    tol = max(cfg.abs_tol, cfg.rel_tol * norm0)
    if norm0 < cfg.abs_tol:
        report.converged = True
        return x, report
    for it in range(cfg.max_iter):
        _, jac = problem.assemble(x)
        scale = None
        if cfg.equilibrate:
            scale = 1.0 / np.maximum(np.abs(jac).max(axis=1).toarray().ravel(),
                                     1e-300)
            jac = sp.diags(scale) @ jac
        rhs = -r if scale is None else -(scale * r)
        dx = linear_solve(jac, rhs)
        step = 1.0
        if cfg.line_search:
            for _ in range(8):
                rn = np.linalg.norm(problem.residual(x + step * dx))
                if rn < (1 - 1e-4 * step) * np.linalg.norm(r):
                    break
                step *= 0.5
        x = x + step * dx
        r = problem.residual(x)
        report.iterations = it + 1
        report.residual_norms.append(np.linalg.norm(r))
        report.update_norms.append(np.linalg.norm(step * dx))
        if report.residual_norms[-1] < tol:
            report.converged = True
            return x, report
    raise NonConvergenceError(
        f"Newton did not converge in {cfg.max_iter} iterations "
        f"(last residual {report.residual_norms[-1]:.3e})", report)
