"""Interface coupling: projections, facet mass fluxes, slip coefficients.

Each coupling-marked free-flow face sigma overlaps a set of facets gamma
(built in :mod:`macbox.mesh`).  Two projection operators map porous vertex
values to a single value per face:

  * 'l2':   exact integral of the piecewise-linear trace over each facet
            (endpoint average times |gamma|), summed and divided by |sigma|;
  * 'area': area-weighted owning-vertex values,
            sum |gamma| s_v(gamma) / |sigma|.

Both are row-stochastic.  On a grid whose primary interface edges coincide
with the free-flow faces the two weight matrices are identical.

The advective mass exchange is one flux per facet computed from the
free-flow face velocity,

    F_ff = |gamma| rho_up (v_ff . n_ff),     F_pm = -F_ff,

so interface conservation holds by construction.  The slip coefficient for
the Beavers-Joseph-Saffman closure is alpha / sqrt(t K t) with K taken
from the porous element under the interface point.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, InvalidInputError
from .mesh import DualTopology, InterfaceFacet, StaggeredGrid, intersect_interface


class CouplingContext:
    """Facets plus everything the assemblers need at the interface."""

    def __init__(self, grid: StaggeredGrid, dual: DualTopology, facets,
                 alpha_bjs=1.0, projection="l2", zeta=1.0,
                 rho_ff=1.0, rho_pm=None):
        self.grid = grid
        self.dual = dual
        self.facets = list(facets)
        if projection not in ("l2", "area"):
            raise InvalidInputError(f"unknown projection kind {projection!r}")
        self.projection = projection
        self.alpha_bjs = float(alpha_bjs)
        self.zeta = float(zeta)
        self.rho_ff = float(rho_ff)
        self.rho_pm = float(rho_pm) if rho_pm is not None else float(rho_ff)

        nxp1, ny = grid.nx + 1, grid.ny
        self.u_slot = np.full((nxp1, ny), -1, dtype=int)
        self.v_slot = np.full((grid.nx, ny + 1), -1, dtype=int)
        self.u_faces, self.v_faces = [], []
        for g in self.facets:
            if g.ff_kind == "u":
                if self.u_slot[g.ff_i, g.ff_j] < 0:
                    self.u_slot[g.ff_i, g.ff_j] = len(self.u_faces)
                    self.u_faces.append((g.ff_i, g.ff_j))
            else:
                if self.v_slot[g.ff_i, g.ff_j] < 0:
                    self.v_slot[g.ff_i, g.ff_j] = len(self.v_faces)
                    self.v_faces.append((g.ff_i, g.ff_j))

        nv = dual.mesh.n_vertices
        self.pi_u_l2, self.pi_u_area = self._projections(self.u_slot, "u", nv)
        self.pi_v_l2, self.pi_v_area = self._projections(self.v_slot, "v", nv)

        # facet arrays for the mass exchange
        self.f_measure = np.array([g.measure for g in self.facets])
        self.f_vertex = np.array([g.pm_vertex for g in self.facets], dtype=int)
        self.f_is_u = np.array([g.ff_kind == "u" for g in self.facets])
        self.f_flat = np.array(
            [g.ff_i * ny + g.ff_j if g.ff_kind == "u"
             else g.ff_i * (ny + 1) + g.ff_j for g in self.facets], dtype=int)
        # v . n_ff = sign * stored DOF value
        self.f_sign = np.array([g.n_ff[0] if g.ff_kind == "u" else g.n_ff[1]
                                for g in self.facets])

        self._beta_cache = {}

    # -- projections --------------------------------------------------------

    def _face_measure(self, kind):
        return self.grid.dy if kind == "u" else self.grid.dx

    def _projections(self, slot, kind, nv):
        rows_l2, cols_l2, w_l2 = [], [], []
        rows_a, cols_a, w_a = [], [], []
        sigma = self._face_measure(kind)
        for g in self.facets:
            if g.ff_kind != kind:
                continue
            r = slot[g.ff_i, g.ff_j]
            p, q = self.dual.mesh.boundary_edges[
                self.dual.boundary_subfaces[g.pm_subface].edge]
            xp = self.dual.mesh.vertices[p]
            xq = self.dual.mesh.vertices[q]
            ax = g.axis
            t0 = (g.lo - xp[ax]) / (xq[ax] - xp[ax])
            t1 = (g.hi - xp[ax]) / (xq[ax] - xp[ax])
            tm = 0.5 * (t0 + t1)  # exact trace integral: trapezoid on P1
            rows_l2 += [r, r]
            cols_l2 += [int(p), int(q)]
            w_l2 += [g.measure * (1 - tm) / sigma, g.measure * tm / sigma]
            rows_a.append(r)
            cols_a.append(int(g.pm_vertex))
            w_a.append(g.measure / sigma)
            g.trace_w = np.array([1 - tm, tm])
        n = max(slot.max() + 1, 0)
        mat_l2 = sp.csr_matrix((w_l2, (rows_l2, cols_l2)), shape=(n, nv))
        mat_a = sp.csr_matrix((w_a, (rows_a, cols_a)), shape=(n, nv))
        return mat_l2, mat_a

    def projection_matrices(self, kind=None):
        """(u-face matrix, v-face matrix) for a projection kind."""
        kind = kind or self.projection
        if kind == "l2":
            return self.pi_u_l2, self.pi_v_l2
        return self.pi_u_area, self.pi_v_area

    def tractions(self, phat, kind=None):
        """Projected porous pressure per coupling face (u-slots, v-slots)."""
        pi_u, pi_v = self.projection_matrices(kind)
        return pi_u @ phat, pi_v @ phat

    def project_pm_trace(self, face_kind, i, j, vertex_values, kind=None):
        """Projection of porous vertex values onto one coupling face."""
        slot = self.u_slot if face_kind == "u" else self.v_slot
        s = slot[i, j]
        if s < 0:
            raise ConfigError(f"face ({face_kind},{i},{j}) is not a coupling face")
        pi_u, pi_v = self.projection_matrices(kind)
        mat = pi_u if face_kind == "u" else pi_v
        return float(mat[s] @ vertex_values)

    # -- facet mass exchange -------------------------------------------------

    def facet_ff_flux(self, U, V):
        """Advective mass flux out of the free flow, one entry per facet."""
        vals = np.where(self.f_is_u, U.ravel()[self.f_flat],
                        V.ravel()[self.f_flat])
        vn = self.f_sign * vals
        zeta = self.zeta
        rho_up = np.where(vn > 0, self.rho_ff, self.rho_pm)
        rho_dn = np.where(vn > 0, self.rho_pm, self.rho_ff)
        return self.f_measure * (zeta * rho_up + (1 - zeta) * rho_dn) * vn

    def pm_vertex_flux(self, U, V):
        """Per-vertex outward boundary flux for the porous residual.

        The outward pm flux through a facet is -F_ff (conservation pairing
        F_pm = -F_ff facet by facet); the porous residual adds outward
        fluxes positively.
        """
        flux = self.facet_ff_flux(U, V)
        out = np.zeros(self.dual.mesh.n_vertices)
        np.add.at(out, self.f_vertex, -flux)
        return out

    # -- slip coefficients ----------------------------------------------------

    def bjs_beta(self, point, tangent_axis):
        """alpha / sqrt(t K t) at an interface point, K from the porous
        element owning the boundary sub-face under the point."""
        key = (round(point[0], 12), round(point[1], 12), tangent_axis)
        if key in self._beta_cache:
            return self._beta_cache[key]
        best, dist = None, np.inf
        for g in self.facets:
            s = point[g.axis]
            line_off = abs(point[1 - g.axis] - g.line)
            if line_off > 1e-9 * max(1.0, abs(g.line)):
                continue
            d = max(g.lo - s, s - g.hi, 0.0)
            if d < dist:
                best, dist = g, d
        if best is None:
            raise ConfigError(f"no interface facet near point {point}")
        K = self.dual.mesh.permeability[best.pm_element]
        tkt = K[tangent_axis, tangent_axis]
        if tkt <= 0:
            raise InvalidInputError("t.K.t must be positive on the interface")
        beta = self.alpha_bjs / np.sqrt(tkt)
        self._beta_cache[key] = beta
        return beta


def build_coupling(grid: StaggeredGrid, dual: DualTopology, segments,
                   **kwargs) -> CouplingContext:
    """Intersect all interface segments and assemble the coupling context."""
    facets = []
    for seg in segments:
        facets.extend(intersect_interface(grid, dual, seg))
    return CouplingContext(grid, dual, facets, **kwargs)


def coupling_mass_flux(ctx: CouplingContext, facet: InterfaceFacet, U, V):
    """(ff-side, pm-side) advective flux pair for one facet; sums to zero."""
    idx = ctx.facets.index(facet)
    flux = ctx.facet_ff_flux(U, V)[idx]
    return flux, -flux
