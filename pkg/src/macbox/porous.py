"""Vertex-centered (box) finite-volume discretization of porous-medium flow.

Stationary single-phase Darcy flow with full-tensor permeability and an
optional Forchheimer drag term.  Discrete fluxes across sub-control-volume
faces use the piecewise (bi)linear basis gradients tabulated in the dual
topology:

    vtilde = -K_E (grad p~ - rho g)          at the integration point
    F      = |sigma| (rho/mu)_up (vtilde . n)

with the mobility-weighted density upwinded between the two adjacent
sub-control volumes (zeta-weighted; inert for constant properties).  With
the Forchheimer term the face velocity solves v + beta |v| v = vtilde/mu
instead, where beta = c_F sqrt(K) rho/mu and K must be scalar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidInputError
from .mesh import BoxMesh, DualTopology, eval_basis  # noqa: F401  (re-export)


@dataclass
class PorousParams:
    viscosity: float = 1.0
    density: float = 1.0
    gravity: tuple = (0.0, 0.0)
    porosity: float = 1.0        # stored; inert for stationary single phase
    forchheimer_cf: float = 0.0  # 0 disables the quadratic drag
    upwind_weight: float = 1.0   # zeta in [0.5, 1]

    def __post_init__(self):
        if self.viscosity <= 0 or self.density <= 0:
            raise InvalidInputError("viscosity and density must be positive")
        if not 0 < self.porosity <= 1:
            raise InvalidInputError(f"porosity must be in (0, 1], got {self.porosity}")
        if self.forchheimer_cf < 0:
            raise InvalidInputError("Forchheimer coefficient must be >= 0")
        if not 0.5 <= self.upwind_weight <= 1.0:
            raise InvalidInputError("upwind weight must be in [0.5, 1]")


@dataclass
class PmDirichlet:
    value: object  # callable (x, y) -> pressure


class PmNoFlow:
    pass


class PmCoupling:
    pass


def solve_forchheimer_speed(d, beta):
    """Speed s >= 0 with s (1 + beta s) = d, for drive magnitude d >= 0.

    Uses the rationalized root 2d / (1 + sqrt(1 + 4 beta d)), which is
    exact in the Darcy limit beta = 0 and stable for small drives.
    """
    d = np.asarray(d, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if (d < 0).any() or (beta < 0).any():
        raise InvalidInputError("drive and Forchheimer factor must be >= 0")
    return 2.0 * d / (1.0 + np.sqrt(1.0 + 4.0 * beta * d))


def darcy_velocity(dual: DualTopology, e, k, phat, params: PorousParams):
    """Discrete Darcy velocity -K_E (grad p~ - rho g) at scvf k of element e."""
    mesh = dual.mesh
    conn = mesh.corners(e)
    grad = dual.basis_grad[e, k, : len(conn)]
    gradp = phat[conn] @ grad
    g = np.asarray(params.gravity, dtype=float)
    return -mesh.permeability[e] @ (gradp - params.density * g)


def box_flux(dual: DualTopology, e, k, phat, params: PorousParams):
    """Discrete mass flux through scvf k of element e, signed out of the
    lower-global-index corner control volume."""
    vt = darcy_velocity(dual, e, k, phat, params)
    n = dual.scvf_normal[e, k]
    lam = 1.0 / params.viscosity
    if params.forchheimer_cf > 0:
        beta = _forchheimer_beta(dual.mesh, params)[e]
        drive = lam * vt
        mag = np.hypot(*drive)
        s = solve_forchheimer_speed(mag, beta)
        vel = drive * (s / mag) if mag > 0 else drive
        return dual.scvf_measure[e, k] * params.density * (vel @ n)
    return dual.scvf_measure[e, k] * params.density * lam * (vt @ n)


def _forchheimer_beta(mesh: BoxMesh, params: PorousParams):
    """Per-element beta = c_F sqrt(K) rho / mu; requires scalar permeability."""
    kk = mesh.permeability
    scale = np.abs(kk).max()
    if np.abs(kk[:, 0, 1]).max() > 1e-12 * scale or \
            np.abs(kk[:, 0, 0] - kk[:, 1, 1]).max() > 1e-12 * scale:
        raise InvalidInputError("Forchheimer drag requires scalar (isotropic) K")
    return params.forchheimer_cf * np.sqrt(kk[:, 0, 0]) * \
        params.density / params.viscosity


class PmAssembler:
    """Vectorized residual assembly for the porous subdomain.

    The residual of a control volume K is

        sum_{scvf of K} F  +  boundary/coupling fluxes  -  sum_{scv} |scv| q

    Rows of Dirichlet vertices are zeroed; the solver never exposes them as
    unknowns.  Coupling fluxes arrive per vertex from the facet exchange.
    """

    def __init__(self, dual: DualTopology, params: PorousParams, bc_spec,
                 source=None, source_integrals=None, density_field=None):
        self.dual = dual
        self.params = params
        self.density_field = density_field  # optional per-vertex densities
        mesh = dual.mesh
        self.n_vertices = mesh.n_vertices

        for m in np.unique(mesh.boundary_markers):
            if mesh.marker_names[m] not in bc_spec:
                raise ConfigError(
                    f"no boundary condition for marker {mesh.marker_names[m]!r}")

        # flatten valid scvfs
        e_ids, k_ids = np.nonzero(dual.scvf_valid)
        conn = mesh.elements[e_ids]                       # (-1)-padded
        self.conn = np.where(conn >= 0, conn, 0)
        self.conn_mask = conn >= 0
        self.grad = dual.basis_grad[e_ids, k_ids]         # (ns, 4, 2)
        self.normal = dual.scvf_normal[e_ids, k_ids]
        self.measure = dual.scvf_measure[e_ids, k_ids]
        pair = dual.scvf_pair[e_ids, k_ids]
        self.v_lo = conn[np.arange(len(e_ids)), pair[:, 0]]
        self.v_hi = conn[np.arange(len(e_ids)), pair[:, 1]]
        self.K = mesh.permeability[e_ids]
        self.e_ids = e_ids
        if params.forchheimer_cf > 0:
            self.beta = _forchheimer_beta(mesh, params)[e_ids]
        else:
            self.beta = None

        # Dirichlet vertices and values (Dirichlet wins at marker corners)
        self.dirichlet_mask = np.zeros(self.n_vertices, dtype=bool)
        self.dirichlet_values = np.zeros(self.n_vertices)
        for be, (p, q) in enumerate(mesh.boundary_edges):
            bc = bc_spec[mesh.marker_names[mesh.boundary_markers[be]]]
            if isinstance(bc, PmDirichlet):
                for v in (int(p), int(q)):
                    self.dirichlet_mask[v] = True
                    x, y = mesh.vertices[v]
                    self.dirichlet_values[v] = bc.value(x, y)

        self.source_cv = np.zeros(self.n_vertices)
        if source_integrals is not None:
            self.source_cv = np.asarray(source_integrals, dtype=float)
        elif source is not None:
            # centroid (midpoint) rule per sub-control volume
            for n in (3, 4):
                ids = np.nonzero(mesh.n_corners == n)[0]
                if not len(ids):
                    continue
                cent = dual.scv_centroid[ids, :n]
                qv = source(cent[..., 0], cent[..., 1])
                np.add.at(self.source_cv, mesh.elements[ids, :n].ravel(),
                          (dual.scv_measure[ids, :n] * qv).ravel())

    def apply_dirichlet(self, phat):
        out = np.array(phat, dtype=float)
        out[self.dirichlet_mask] = self.dirichlet_values[self.dirichlet_mask]
        return out

    def fluxes(self, phat):
        """Signed flux out of the lower-index CV, for every interior scvf."""
        p = phat[self.conn] * self.conn_mask
        gradp = np.einsum("sk,skd->sd", p, self.grad)
        g = np.asarray(self.params.gravity, dtype=float)
        vt = -np.einsum("sde,se->sd", self.K, gradp - self.params.density * g)
        lam = 1.0 / self.params.viscosity
        if self.density_field is not None:
            rho_a = self.density_field[self.v_lo]
            rho_b = self.density_field[self.v_hi]
        else:
            rho_a = rho_b = self.params.density
        if self.beta is not None:
            drive = lam * vt
            mag = np.hypot(drive[:, 0], drive[:, 1])
            s = solve_forchheimer_speed(mag, self.beta)
            scale = np.where(mag > 0, s / np.where(mag > 0, mag, 1.0), 1.0)
            vn = np.einsum("sd,sd->s", drive, self.normal) * scale
            w_a, w_b = rho_a, rho_b
        else:
            vn = np.einsum("sd,sd->s", vt, self.normal)
            w_a, w_b = rho_a * lam, rho_b * lam
        # zeta-upwinding of the advected density/mobility product between
        # the two adjacent scvs; inert for constant properties.
        zeta = self.params.upwind_weight
        w_up = np.where(vn > 0, w_a, w_b)
        w_dn = np.where(vn > 0, w_b, w_a)
        return self.measure * (zeta * w_up + (1 - zeta) * w_dn) * vn

    def residual(self, phat, vertex_flux=None):
        """Full per-vertex residual; Dirichlet rows are zeroed."""
        flux = self.fluxes(phat)
        r = np.zeros(self.n_vertices)
        np.add.at(r, self.v_lo, flux)
        np.add.at(r, self.v_hi, -flux)
        r -= self.source_cv
        if vertex_flux is not None:
            r += vertex_flux
        r[self.dirichlet_mask] = 0.0
        return r

    def vertex_neighbors(self):
        """Vertex adjacency through shared elements (for Jacobian patterns)."""
        mesh = self.dual.mesh
        nbrs = [set() for _ in range(self.n_vertices)]
        for n in (3, 4):
            ids = np.nonzero(mesh.n_corners == n)[0]
            if not len(ids):
                continue
            for conn in mesh.elements[ids, :n]:
                for a in conn:
                    nbrs[a].update(int(b) for b in conn)
        return nbrs
