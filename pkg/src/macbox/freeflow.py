"""Staggered-grid (MAC) residual assembly for stationary (Navier-)Stokes.

Unknowns: cell pressures and face-normal velocities.  The momentum control
volume of a velocity DOF is the dual cell spanning half of each adjacent
primary cell; its residual integrates the full stress

    flux_x(u-momentum) = rho u u  - 2 mu du/dx + p
    flux_y(u-momentum) = rho v u  -   mu (du/dy + dv/dx)

over the dual-cell boundary, minus body forces.  Convected velocities are
zeta-weighted between donor and downwind values (zeta = 1 full upwind,
zeta = 0.5 central); shear stresses live at primary-grid corners and are
shared between the two momentum components.

Boundary closures:
  - Dirichlet velocity pins normal DOFs; tangential ghost values use
    linear reflection (ghost = 2 g - interior).
  - 'outflow' imposes a pressure in the normal momentum flux and
    do-nothing (zero) tangential shear.
  - symmetry pins the normal DOF to zero and zeroes the shear.
  - 'coupling' faces keep their normal DOF as an unknown; the normal
    momentum flux through the interface is the projected porous pressure
    (total traction), and tangential DOFs are closed with the
    Beavers-Joseph-Saffman slip relation using the unsymmetrized velocity
    gradient:  du_t/dn = -beta u_t,  beta = alpha / sqrt(t K t),
    discretely  u_slip = u_interior / (1 + beta d),  d = half spacing.

The y-momentum balance is assembled by the same code on the transposed
grid (swap x<->y, u<->v).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError
from .mesh import StaggeredGrid

# face/closure kind codes
K_INT, K_DIR, K_SYM, K_OUT, K_CPL, K_NONE = 0, 1, 2, 3, 4, 5
_PRECEDENCE = {K_CPL: 4, K_DIR: 3, K_OUT: 2, K_SYM: 1}


@dataclass
class FreeFlowParams:
    density: float = 1.0
    viscosity: float = 1.0
    gravity: tuple = (0.0, 0.0)
    enable_inertia: bool = True
    upwind_weight: float = 1.0  # zeta in [0.5, 1]

    def __post_init__(self):
        if self.density <= 0 or self.viscosity <= 0:
            raise InvalidInputError("density and viscosity must be positive")
        if not 0.5 <= self.upwind_weight <= 1.0:
            raise InvalidInputError("upwind weight must be in [0.5, 1]")


@dataclass
class FfDirichlet:
    velocity: object  # callable (x, y) -> (u, v)


class FfNoSlip:
    velocity = staticmethod(lambda x, y: (0.0, 0.0))


class FfSymmetry:
    pass


@dataclass
class FfOutflow:
    pressure: object  # callable (x, y) -> p


class FfCoupling:
    pass


def _bc_kind(bc):
    if isinstance(bc, (FfDirichlet, FfNoSlip)):
        return K_DIR
    if isinstance(bc, FfSymmetry):
        return K_SYM
    if isinstance(bc, FfOutflow):
        return K_OUT
    if isinstance(bc, FfCoupling):
        return K_CPL
    raise ConfigError(f"unknown boundary condition {bc!r}")


def _upw(a, b, w, zeta):
    """zeta-weighted upwind value transported by w (positive: a -> b)."""
    up = np.where(w > 0, a, b)
    dn = np.where(w > 0, b, a)
    return zeta * up + (1 - zeta) * dn


def midpoint_rect_integral(f, rects):
    """Midpoint rule over (n, 4) rectangles (x0, y0, x1, y1)."""
    xm = 0.5 * (rects[:, 0] + rects[:, 2])
    ym = 0.5 * (rects[:, 1] + rects[:, 3])
    area = (rects[:, 2] - rects[:, 0]) * (rects[:, 3] - rects[:, 1])
    return np.asarray(f(xm, ym)) * area


@dataclass
class _AxisParams:
    density: float
    viscosity: float
    enable_inertia: bool
    upwind_weight: float
    gravity_component: float


# ---------------------------------------------------------------------------
# corner shear with per-corner boundary closures
# ---------------------------------------------------------------------------


class _CornerShear:
    """tau_xy = mu (du/dy + dv/dx) at primary-grid corners.

    The two derivative fields get independent boundary closures: du/dy
    from the markers of the adjacent y-faces, dv/dx from the adjacent
    x-faces.  A corner on both a horizontal and a vertical boundary (hole
    corners) gets both closures.
    """

    def __init__(self, grid, xkind, ykind, bc_at, bjs_beta, mu):
        self.grid = grid
        self.mu = mu
        nx, ny = grid.nx, grid.ny
        xf, _ = grid.xface_centers()
        _, yf = grid.yface_centers()

        duy = {}  # corner -> (kind, near_i, near_j, sign, data)
        for i, jc in zip(*np.nonzero((ykind != K_INT) & (ykind != K_NONE))):
            i, jc = int(i), int(jc)
            kind = int(ykind[i, jc])
            above = jc < ny and grid.active[i, jc]
            for ic in (i, i + 1):
                prev = duy.get((ic, jc))
                if prev is not None and _PRECEDENCE[prev[0]] >= _PRECEDENCE[kind]:
                    continue
                sgn = 1.0 if above else -1.0
                nr = (ic, jc) if above else (ic, jc - 1)
                data = 0.0
                if kind == K_DIR:
                    data = bc_at[("y", i, jc)].velocity(xf[ic], yf[jc])[0]
                elif kind == K_CPL:
                    data = bjs_beta(np.array([xf[ic], yf[jc]]), 0)
                duy[(ic, jc)] = (kind, nr[0], nr[1], sgn, data)

        dvx = {}
        for ic, j in zip(*np.nonzero((xkind != K_INT) & (xkind != K_NONE))):
            ic, j = int(ic), int(j)
            kind = int(xkind[ic, j])
            east = ic < nx and grid.active[ic, j]
            for jc in (j, j + 1):
                prev = dvx.get((ic, jc))
                if prev is not None and _PRECEDENCE[prev[0]] >= _PRECEDENCE[kind]:
                    continue
                sgn = 1.0 if east else -1.0
                nr = (ic, jc) if east else (ic - 1, jc)
                data = 0.0
                if kind == K_DIR:
                    data = bc_at[("x", ic, j)].velocity(xf[ic], yf[jc])[1]
                elif kind == K_CPL:
                    data = bjs_beta(np.array([xf[ic], yf[jc]]), 1)
                dvx[(ic, jc)] = (kind, nr[0], nr[1], sgn, data)

        def pack(groups):
            out = {}
            for kind in (K_DIR, K_CPL, K_SYM, K_OUT):
                rec = [(c[0], c[1], g[1], g[2], g[3], g[4])
                       for c, g in groups.items() if g[0] == kind]
                out[kind] = np.array(rec, dtype=float).reshape(-1, 6)
            return out

        self.duy_grp = pack(duy)
        self.dvx_grp = pack(dvx)

    def _apply(self, field, groups, vals, h, half):
        for kind, rec in groups.items():
            if not len(rec):
                continue
            ic = rec[:, 0].astype(int)
            jc = rec[:, 1].astype(int)
            near = vals[rec[:, 2].astype(int), rec[:, 3].astype(int)]
            if kind == K_DIR:
                field[ic, jc] = rec[:, 4] * 2.0 * (near - rec[:, 5]) / h
            elif kind == K_CPL:
                slip = near / (1.0 + rec[:, 5] * half)
                field[ic, jc] = rec[:, 4] * (near - slip) / half
            else:  # symmetry / outflow: zero shear
                field[ic, jc] = 0.0

    def evaluate(self, U, V):
        grid = self.grid
        nx, ny = grid.nx, grid.ny
        duy = np.zeros((nx + 1, ny + 1))
        duy[:, 1:ny] = (U[:, 1:] - U[:, :-1]) / grid.dy
        dvx = np.zeros((nx + 1, ny + 1))
        dvx[1:nx, :] = (V[1:, :] - V[:-1, :]) / grid.dx
        self._apply(duy, self.duy_grp, U, grid.dy, grid.dy / 2.0)
        self._apply(dvx, self.dvx_grp, V, grid.dx, grid.dx / 2.0)
        return self.mu * (duy + dvx)


# ---------------------------------------------------------------------------
# one momentum orientation
# ---------------------------------------------------------------------------


class _AxisAssembler:
    """Momentum residual for the velocity component along the local x axis.

    Local-frame arrays: U (nx+1, ny) carries the assembled component,
    V (nx, ny+1) the transverse one, P (nx, ny) the pressure.  Fully
    interior rows come from one vectorized pass; rows touching any
    boundary are rebuilt side-by-side from typed index groups.
    """

    def __init__(self, nx, ny, dx, dy, active, ukind, vkind, params,
                 u_positions, wall_trace, pout, slot, beta_at, tangent_axis,
                 f_component, rect_integral):
        self.nx, self.ny, self.dx, self.dy = nx, ny, dx, dy
        self.params = params
        self.vkind = vkind
        self.slot = slot

        act = np.zeros((nx + 2, ny), dtype=bool)
        act[1:-1] = active
        self.cw = act[:-1, :]   # cell on the local-west side of each u face
        self.ce = act[1:, :]
        exists = self.cw | self.ce
        self.unknown = exists & np.isin(ukind, (K_INT, K_OUT, K_CPL))

        fully = np.zeros_like(self.unknown)
        if nx > 1:
            fully[1:nx, :] = active[:-1, :] & active[1:, :] \
                & (vkind[0:nx - 1, 0:ny] == K_INT) & (vkind[1:nx, 0:ny] == K_INT) \
                & (vkind[0:nx - 1, 1:] == K_INT) & (vkind[1:nx, 1:] == K_INT)
        self.special = self.unknown & ~fully
        self.ukind = ukind

        self._build_groups(wall_trace, pout, beta_at, tangent_axis)
        self._build_sources(u_positions, f_component, rect_integral)

    def _build_groups(self, wall_trace, pout, beta_at, tangent_axis):
        ny = self.ny
        gf_cell, gf_out, gf_cpl = [], [], []
        gl_int, gl_wall, gl_out, gl_cpl = [], [], [], []
        for i, j in zip(*np.nonzero(self.special)):
            i, j = int(i), int(j)
            r = i * ny + j
            # frontal: +east flux (cell (i, j)), -west flux (cell (i-1, j))
            for sgn, cell_i, live in ((1.0, i, self.ce[i, j]),
                                      (-1.0, i - 1, self.cw[i, j])):
                if live:
                    gf_cell.append((r, cell_i * ny + j, sgn))
                else:
                    kind = self.ukind[i, j]
                    if kind == K_OUT:
                        iin = i - 1 if sgn > 0 else i + 1
                        gf_out.append((r, iin * ny + j, sgn, pout[i, j]))
                    elif kind == K_CPL:
                        gf_cpl.append((r, self.slot_of(i, j), sgn))
                    else:
                        raise ConfigError(
                            f"momentum face ({i},{j}) has no usable closure")
            # lateral halves; each overlaps one transverse face (ih, jc)
            for sgn, jc in ((1.0, j + 1), (-1.0, j)):
                for ih in (i - 1, i):
                    own = self.cw[i, j] if ih == i - 1 else self.ce[i, j]
                    if not own:
                        continue
                    kind = self.vkind[ih, jc]
                    vflat = ih * (ny + 1) + jc
                    cflat = i * (ny + 1) + jc
                    if kind == K_INT:
                        jn = j + 1 if sgn > 0 else j - 1
                        gl_int.append((r, sgn, vflat, cflat, i * ny + jn))
                    elif kind == K_DIR:
                        gl_wall.append((r, sgn, vflat, cflat,
                                        wall_trace(ih, jc, i)))
                    elif kind == K_OUT:
                        gl_out.append((r, sgn, vflat, cflat))
                    elif kind == K_CPL:
                        gl_cpl.append((r, sgn, vflat, cflat,
                                       beta_at(i, jc, tangent_axis)))
                    # symmetry: zero flux, no entry

        def arr(lst, n):
            return np.array(lst, dtype=float).reshape(-1, n)

        self.gf_cell = arr(gf_cell, 3)
        self.gf_out = arr(gf_out, 4)
        self.gf_cpl = arr(gf_cpl, 3)
        self.gl_int = arr(gl_int, 5)
        self.gl_wall = arr(gl_wall, 5)
        self.gl_out = arr(gl_out, 4)
        self.gl_cpl = arr(gl_cpl, 5)
        self.special_flat = np.nonzero(self.special.ravel())[0]

    def slot_of(self, i, j):
        s = self.slot[i, j]
        if s < 0:
            raise ConfigError(f"coupling face ({i},{j}) missing from coupling map")
        return s

    def _build_sources(self, u_positions, f_component, rect_integral):
        nx, ny, dx, dy = self.nx, self.ny, self.dx, self.dy
        rows = np.nonzero(self.unknown.ravel())[0]
        self.src = np.zeros((nx + 1) * ny)
        if not len(rows):
            return
        pos = u_positions[rows]
        cw = self.cw.ravel()[rows]
        ce = self.ce.ravel()[rows]
        rects = np.column_stack([
            pos[:, 0] - np.where(cw, dx / 2, 0.0),
            pos[:, 1] - dy / 2,
            pos[:, 0] + np.where(ce, dx / 2, 0.0),
            pos[:, 1] + dy / 2,
        ])
        area = (rects[:, 2] - rects[:, 0]) * (rects[:, 3] - rects[:, 1])
        self.src[rows] = self.params.density * self.params.gravity_component * area
        if f_component is not None:
            self.src[rows] += rect_integral(f_component, rects)

    def frontal_flux(self, U, P):
        p = self.params
        rho_i = p.density if p.enable_inertia else 0.0
        ub = 0.5 * (U[:-1, :] + U[1:, :])
        adv = rho_i * ub * _upw(U[:-1, :], U[1:, :], ub, p.upwind_weight)
        return adv - 2 * p.viscosity * (U[1:, :] - U[:-1, :]) / self.dx + P

    def residual(self, U, V, P, TAU, traction):
        nx, ny, dx, dy = self.nx, self.ny, self.dx, self.dy
        p = self.params
        rho_i = p.density if p.enable_inertia else 0.0
        zeta = p.upwind_weight

        FU = self.frontal_flux(U, P)
        R = np.zeros((nx + 1, ny))
        if nx > 1:
            Uc = U[1:nx, :]
            Un = np.concatenate([U[1:nx, 1:], U[1:nx, -1:]], axis=1)
            Us = np.concatenate([U[1:nx, :1], U[1:nx, :-1]], axis=1)
            Vnw, Vne = V[0:nx - 1, 1:], V[1:nx, 1:]
            Vsw, Vse = V[0:nx - 1, :-1], V[1:nx, :-1]
            convN = 0.5 * rho_i * (Vnw * _upw(Uc, Un, Vnw, zeta)
                                   + Vne * _upw(Uc, Un, Vne, zeta))
            convS = 0.5 * rho_i * (Vsw * _upw(Us, Uc, Vsw, zeta)
                                   + Vse * _upw(Us, Uc, Vse, zeta))
            R[1:nx, :] = (FU[1:, :] - FU[:-1, :]) * dy \
                + dx * (convN - convS) \
                - dx * (TAU[1:nx, 1:] - TAU[1:nx, :-1])

        Rf = R.ravel()
        Rf -= self.src
        sp = self.special_flat
        Rf[sp] = -self.src[sp]

        Uf, Vf, Tf, FUf = U.ravel(), V.ravel(), TAU.ravel(), FU.ravel()
        if len(self.gf_cell):
            g = self.gf_cell
            np.add.at(Rf, g[:, 0].astype(int),
                      g[:, 2] * FUf[g[:, 1].astype(int)] * dy)
        if len(self.gf_out):
            g = self.gf_out
            r = g[:, 0].astype(int)
            uown = Uf[r]
            dudx = g[:, 2] * (uown - Uf[g[:, 1].astype(int)]) / dx
            fd = rho_i * uown * uown - 2 * p.viscosity * dudx + g[:, 3]
            np.add.at(Rf, r, g[:, 2] * fd * dy)
        if len(self.gf_cpl):
            g = self.gf_cpl
            np.add.at(Rf, g[:, 0].astype(int),
                      g[:, 2] * traction[g[:, 1].astype(int)] * dy)
        half = dx / 2
        if len(self.gl_int):
            g = self.gl_int
            r = g[:, 0].astype(int)
            w = Vf[g[:, 2].astype(int)]
            a, b = Uf[r], Uf[g[:, 4].astype(int)]
            sgn = g[:, 1]
            tr = np.where(sgn > 0, _upw(a, b, w, zeta), _upw(b, a, w, zeta))
            np.add.at(Rf, r, sgn * (rho_i * w * tr
                                    - Tf[g[:, 3].astype(int)]) * half)
        if len(self.gl_wall):
            g = self.gl_wall
            r = g[:, 0].astype(int)
            np.add.at(Rf, r, g[:, 1] * (rho_i * Vf[g[:, 2].astype(int)] * g[:, 4]
                                        - Tf[g[:, 3].astype(int)]) * half)
        if len(self.gl_out):
            g = self.gl_out
            r = g[:, 0].astype(int)
            np.add.at(Rf, r, g[:, 1] * (rho_i * Vf[g[:, 2].astype(int)] * Uf[r]
                                        - Tf[g[:, 3].astype(int)]) * half)
        if len(self.gl_cpl):
            g = self.gl_cpl
            r = g[:, 0].astype(int)
            slip = Uf[r] / (1.0 + g[:, 4] * dy / 2)
            np.add.at(Rf, r, g[:, 1] * (rho_i * Vf[g[:, 2].astype(int)] * slip
                                        - Tf[g[:, 3].astype(int)]) * half)
        return R


# ---------------------------------------------------------------------------
# full free-flow assembler
# ---------------------------------------------------------------------------


class FfAssembler:
    """Mass and momentum residuals for the whole staggered grid."""

    def __init__(self, grid: StaggeredGrid, params: FreeFlowParams, bc_spec,
                 coupling_info=None, q=None, f=None, rect_integral=None):
        self.grid = grid
        self.params = params
        rect_integral = rect_integral or midpoint_rect_integral

        self.xkind = np.full((grid.nx + 1, grid.ny), K_NONE, dtype=np.int32)
        self.ykind = np.full((grid.nx, grid.ny + 1), K_NONE, dtype=np.int32)
        self.xkind[grid.xface_exists] = K_INT
        self.ykind[grid.yface_exists] = K_INT

        bc_of_marker = {}
        for mid, name in enumerate(grid.marker_names):
            if mid == 0:
                continue
            if (grid.xface_marker == mid).any() or (grid.yface_marker == mid).any():
                if name not in bc_spec:
                    raise ConfigError(f"no boundary condition for marker {name!r}")
                bc_of_marker[mid] = bc_spec[name]
        bc_at = {}
        for i, j in zip(*np.nonzero(grid.xface_marker > 0)):
            bc = bc_of_marker[int(grid.xface_marker[i, j])]
            self.xkind[i, j] = _bc_kind(bc)
            bc_at[("x", int(i), int(j))] = bc
        for i, j in zip(*np.nonzero(grid.yface_marker > 0)):
            bc = bc_of_marker[int(grid.yface_marker[i, j])]
            self.ykind[i, j] = _bc_kind(bc)
            bc_at[("y", int(i), int(j))] = bc
        self.bc_at = bc_at

        xf, yfx = grid.xface_centers()
        xfy, yf = grid.yface_centers()
        self.u_template = np.zeros((grid.nx + 1, grid.ny))
        for i, j in zip(*np.nonzero(self.xkind == K_DIR)):
            self.u_template[i, j] = bc_at[("x", int(i), int(j))].velocity(
                xf[i], yfx[j])[0]
        self.v_template = np.zeros((grid.nx, grid.ny + 1))
        for i, j in zip(*np.nonzero(self.ykind == K_DIR)):
            self.v_template[i, j] = bc_at[("y", int(i), int(j))].velocity(
                xfy[i], yf[j])[1]

        pout_x = np.zeros_like(self.u_template)
        for i, j in zip(*np.nonzero(self.xkind == K_OUT)):
            pout_x[i, j] = bc_at[("x", int(i), int(j))].pressure(xf[i], yfx[j])
        pout_y = np.zeros_like(self.v_template)
        for i, j in zip(*np.nonzero(self.ykind == K_OUT)):
            pout_y[i, j] = bc_at[("y", int(i), int(j))].pressure(xfy[i], yf[j])

        if coupling_info is not None:
            u_slot, v_slot = coupling_info.u_slot, coupling_info.v_slot
            bjs_beta = coupling_info.bjs_beta
        else:
            u_slot = np.full(self.u_template.shape, -1, dtype=int)
            v_slot = np.full(self.v_template.shape, -1, dtype=int)

            def bjs_beta(point, axis):
                raise ConfigError("coupling marker present but no coupling context")

        self.shear = _CornerShear(grid, self.xkind, self.ykind, bc_at,
                                  bjs_beta, params.viscosity)

        ux, uy = np.meshgrid(xf, yfx, indexing="ij")
        u_pos = np.column_stack([ux.ravel(), uy.ravel()])
        vx, vy = np.meshgrid(xfy, yf, indexing="ij")
        v_pos = np.column_stack([vx.ravel(), vy.ravel()])
        vt_pos = np.transpose(v_pos.reshape(grid.nx, grid.ny + 1, 2),
                              (1, 0, 2)).reshape(-1, 2)

        def wall_u_trace(ih, jc, i):
            bc = bc_at[("y", int(ih), int(jc))]
            return bc.velocity(0.5 * (xf[i] + xfy[ih]), yf[jc])[0]

        def wall_v_trace(ih, jc, i):
            # local v frame: lateral face (ih, jc) is the physical x-face
            # (jc, ih); the row i is the physical v-face row
            bc = bc_at[("x", int(jc), int(ih))]
            return bc.velocity(xf[jc], 0.5 * (yf[i] + yfx[ih]))[1]

        def beta_u(i, jc, taxis):
            return bjs_beta(np.array([xf[i], yf[jc]]), taxis)

        def beta_v(i, jc, taxis):
            return bjs_beta(np.array([xf[jc], yf[i]]), taxis)

        fx = (lambda x, y: np.asarray(f(x, y))[0]) if f is not None else None
        fy_loc = (lambda xl, yl: np.asarray(f(yl, xl))[1]) if f is not None else None

        def rect_integral_t(func, rects):
            return rect_integral(lambda xp, yp: func(yp, xp),
                                 rects[:, [1, 0, 3, 2]])

        pu = _AxisParams(params.density, params.viscosity, params.enable_inertia,
                         params.upwind_weight, params.gravity[0])
        pv = _AxisParams(params.density, params.viscosity, params.enable_inertia,
                         params.upwind_weight, params.gravity[1])

        self.ax_u = _AxisAssembler(
            grid.nx, grid.ny, grid.dx, grid.dy, grid.active,
            self.xkind, self.ykind, pu, u_pos, wall_u_trace, pout_x,
            _SlotProxy(u_slot), beta_u, 0, fx, rect_integral)
        self.ax_v = _AxisAssembler(
            grid.ny, grid.nx, grid.dy, grid.dx, grid.active.T,
            self.ykind.T, self.xkind.T, pv, vt_pos, wall_v_trace, pout_y.T,
            _SlotProxy(v_slot.T), beta_v, 1, fy_loc, rect_integral_t)

        xc, yc = grid.cell_centers()
        cx, cy = np.meshgrid(xc, yc, indexing="ij")
        rects = np.column_stack([
            cx.ravel() - grid.dx / 2, cy.ravel() - grid.dy / 2,
            cx.ravel() + grid.dx / 2, cy.ravel() + grid.dy / 2])
        self.src_p = np.zeros(grid.nx * grid.ny)
        if q is not None:
            self.src_p = np.asarray(rect_integral(q, rects), dtype=float)
        self.src_p[~grid.active.ravel()] = 0.0

    @property
    def u_unknown(self):
        return self.ax_u.unknown

    @property
    def v_unknown(self):
        return self.ax_v.unknown.T

    def mass_residual(self, U, V):
        grid = self.grid
        R = (U[1:, :] - U[:-1, :]) * grid.dy + (V[:, 1:] - V[:, :-1]) * grid.dx
        R = R.ravel() - self.src_p
        R[~grid.active.ravel()] = 0.0
        return R.reshape(grid.nx, grid.ny)

    def residual(self, U, V, P, tr_u=None, tr_v=None):
        """Full-field residuals (R_p, R_u, R_v); non-DOF entries are zero."""
        TAU = self.shear.evaluate(U, V)
        tr_u = tr_u if tr_u is not None else np.zeros(1)
        tr_v = tr_v if tr_v is not None else np.zeros(1)
        R_u = self.ax_u.residual(U, V, P, TAU, tr_u)
        R_v = self.ax_v.residual(V.T, U.T, P.T, np.ascontiguousarray(TAU.T),
                                 tr_v).T
        R_u = np.where(self.ax_u.unknown, R_u, 0.0)
        R_v = np.where(self.v_unknown, R_v, 0.0)
        return self.mass_residual(U, V), R_u, R_v


class _SlotProxy:
    """2-D slot lookup handed to an axis assembler."""

    def __init__(self, arr):
        self.arr = arr

    def __getitem__(self, idx):
        return int(self.arr[idx])
