"""Grids and dual topology for the coupled staggered/box discretization.

Two mesh families live here.

``StaggeredGrid`` is a structured, axis-aligned grid for the free-flow
subdomain.  Pressure unknowns sit at cell centers, velocity unknowns on
faces (x-faces carry u, y-faces carry v).  Cells can be masked out to carve
a rectangular hole (e.g. a porous obstacle); faces exposed by the mask
become boundary faces.  Index conventions (i = x index, j = y index):

    p[i, j]   cell,    i = 0..nx-1, j = 0..ny-1,  center (x0+(i+.5)dx, y0+(j+.5)dy)
    u[i, j]   x-face,  i = 0..nx,   j = 0..ny-1,  center (x0+i dx,     y0+(j+.5)dy)
    v[i, j]   y-face,  i = 0..nx-1, j = 0..ny,    center (x0+(i+.5)dx, y0+j dy)

``BoxMesh`` plus ``DualTopology`` hold an unstructured primary mesh of
triangles and/or quadrilaterals for the porous subdomain and the derived
vertex-centered dual: one sub-control volume (scv) per element corner, and
sub-control-volume faces (scvf) running from the element centroid to the
edge midpoints.  Each boundary edge splits at its midpoint into two
boundary sub-faces, each owned by one endpoint vertex; the union of the
sub-faces owned by a vertex is that vertex's share of the domain boundary.

The interface machinery at the bottom decomposes a coupling interface into
facets: the pairwise 1-D overlaps between free-flow faces and porous
boundary sub-faces.  Facets are the unit of flux exchange and projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GeometryError, InvalidInputError, MeshError

INTERIOR = 0  # marker code reserved for interior faces


def polygon_area(points):
    """Signed area (shoelace) of polygons given as (..., n, 2) arrays."""
    x = points[..., 0]
    y = points[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y,
                        axis=-1)


def polygon_centroid(points):
    """Centroids of polygons given as (..., n, 2) arrays."""
    x = points[..., 0]
    y = points[..., 1]
    xs, ys = np.roll(x, -1, axis=-1), np.roll(y, -1, axis=-1)
    cross = x * ys - xs * y
    a = 0.5 * cross.sum(axis=-1)
    cx = np.sum((x + xs) * cross, axis=-1) / (6 * a)
    cy = np.sum((y + ys) * cross, axis=-1) / (6 * a)
    return np.stack([cx, cy], axis=-1)


# ---------------------------------------------------------------------------
# structured staggered grid
# ---------------------------------------------------------------------------


class StaggeredGrid:
    """Axis-aligned structured grid with an optional rectangular hole.

    Face markers are small integers into ``marker_names``; 0 means interior.
    Outer boundary faces get the side names 'left', 'right', 'bottom',
    'top'; faces exposed by the hole get 'coupling'.
    """

    def __init__(self, domain, nx, ny, hole=None):
        x0, y0, x1, y1 = map(float, domain)
        if nx < 1 or ny < 1:
            raise InvalidInputError(f"cell counts must be >= 1, got {nx} x {ny}")
        if x1 <= x0 or y1 <= y0:
            raise InvalidInputError(f"degenerate domain {domain}")
        self.x0, self.y0, self.x1, self.y1 = x0, y0, x1, y1
        self.nx, self.ny = int(nx), int(ny)
        self.dx = (x1 - x0) / nx
        self.dy = (y1 - y0) / ny

        self.active = np.ones((nx, ny), dtype=bool)
        if hole is not None:
            hx0, hy0, hx1, hy1 = hole
            i0, i1 = self._cell_range(hx0, hx1, self.x0, self.dx, nx)
            j0, j1 = self._cell_range(hy0, hy1, self.y0, self.dy, ny)
            if i1 <= i0 or j1 <= j0:
                raise InvalidInputError(f"hole {hole} covers no cells")
            self.active[i0:i1, j0:j1] = False

        act = self.active
        pad_x = np.zeros((nx + 2, ny), dtype=bool)
        pad_x[1:-1, :] = act
        self.xface_exists = pad_x[:-1, :] | pad_x[1:, :]
        self.xface_boundary = pad_x[:-1, :] ^ pad_x[1:, :]
        pad_y = np.zeros((nx, ny + 2), dtype=bool)
        pad_y[:, 1:-1] = act
        self.yface_exists = pad_y[:, :-1] | pad_y[:, 1:]
        self.yface_boundary = pad_y[:, :-1] ^ pad_y[:, 1:]

        self.marker_names = ["interior"]
        self.xface_marker = np.zeros((nx + 1, ny), dtype=np.int32)
        self.yface_marker = np.zeros((nx, ny + 1), dtype=np.int32)
        self._assign_default_markers()

    @staticmethod
    def _cell_range(a, b, origin, h, n):
        ia = int(round((a - origin) / h))
        ib = int(round((b - origin) / h))
        if abs(origin + ia * h - a) > 1e-9 * h or abs(origin + ib * h - b) > 1e-9 * h:
            raise InvalidInputError("hole edges must lie on grid lines")
        return max(ia, 0), min(ib, n)

    def marker_id(self, name):
        if name not in self.marker_names:
            self.marker_names.append(name)
        return self.marker_names.index(name)

    def _assign_default_markers(self):
        nx, ny = self.nx, self.ny
        left, right = self.marker_id("left"), self.marker_id("right")
        bottom, top = self.marker_id("bottom"), self.marker_id("top")
        coup = self.marker_id("coupling")

        xb = self.xface_boundary
        self.xface_marker[0, :][xb[0, :]] = left
        self.xface_marker[nx, :][xb[nx, :]] = right
        self.xface_marker[1:nx, :][xb[1:nx, :]] = coup  # hole-exposed faces
        yb = self.yface_boundary
        self.yface_marker[:, 0][yb[:, 0]] = bottom
        self.yface_marker[:, ny][yb[:, ny]] = top
        self.yface_marker[:, 1:ny][yb[:, 1:ny]] = coup

    def set_side_marker(self, side, name, where=None):
        """Re-mark an outer side (optionally only where a predicate holds).

        ``where`` receives the face-center coordinates along the side and
        returns a boolean mask; by default the whole side is re-marked.
        """
        mid = self.marker_id(name)
        if side in ("left", "right"):
            i = 0 if side == "left" else self.nx
            yc = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
            mask = self.xface_boundary[i, :].copy()
            if where is not None:
                mask &= np.asarray(where(yc), dtype=bool)
            self.xface_marker[i, mask] = mid
        elif side in ("bottom", "top"):
            j = 0 if side == "bottom" else self.ny
            xc = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
            mask = self.yface_boundary[:, j].copy()
            if where is not None:
                mask &= np.asarray(where(xc), dtype=bool)
            self.yface_marker[mask, j] = mid
        else:
            raise InvalidInputError(f"unknown side {side!r}")

    # geometry helpers -----------------------------------------------------

    @property
    def n_cells(self):
        return int(self.active.sum())

    def cell_centers(self):
        xc = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
        yc = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
        return xc, yc

    def xface_centers(self):
        x = self.x0 + np.arange(self.nx + 1) * self.dx
        y = self.y0 + (np.arange(self.ny) + 0.5) * self.dy
        return x, y

    def yface_centers(self):
        x = self.x0 + (np.arange(self.nx) + 0.5) * self.dx
        y = self.y0 + np.arange(self.ny + 1) * self.dy
        return x, y

    @property
    def cell_measure(self):
        return self.dx * self.dy

    def total_cell_measure(self):
        return self.n_cells * self.cell_measure


def build_structured_grid(domain, nx, ny, hole=None):
    """Build a uniform staggered grid over an axis-aligned rectangle."""
    return StaggeredGrid(domain, nx, ny, hole=hole)


# ---------------------------------------------------------------------------
# unstructured primary mesh
# ---------------------------------------------------------------------------


class BoxMesh:
    """Primary mesh of CCW triangles/quadrilaterals with boundary markers.

    ``elements`` is an (ne, 4) int array; triangles pad the last slot with
    -1.  ``boundary_edges`` is (nbe, 2) with a marker per edge.  Each
    element carries a permeability tensor slot (identity by default).
    """

    def __init__(self, vertices, elements, boundary_edges, boundary_markers,
                 marker_names):
        self.vertices = np.asarray(vertices, dtype=float)
        elements = np.asarray(elements, dtype=np.int64)
        if elements.ndim != 2 or elements.shape[1] not in (3, 4):
            raise MeshError("elements must be (ne, 3) or (ne, 4)")
        if elements.shape[1] == 3:
            elements = np.column_stack([elements, np.full(len(elements), -1)])
        self.elements = elements
        self.n_corners = np.where(elements[:, 3] >= 0, 4, 3)
        self.boundary_edges = np.asarray(boundary_edges, dtype=np.int64)
        self.boundary_markers = np.asarray(boundary_markers, dtype=np.int32)
        self.marker_names = list(marker_names)
        self.permeability = np.broadcast_to(
            np.eye(2), (len(elements), 2, 2)).copy()
        self.element_areas = np.empty(len(elements))
        self.element_centroids = np.empty((len(elements), 2))
        for ids, n in ((np.nonzero(self.n_corners == 3)[0], 3),
                       (np.nonzero(self.n_corners == 4)[0], 4)):
            if len(ids):
                pts = self.vertices[self.elements[ids, :n]]
                self.element_areas[ids] = polygon_area(pts)
                self.element_centroids[ids] = polygon_centroid(pts)
        self._validate()

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    def corners(self, e):
        return self.elements[e, : self.n_corners[e]]

    def element_area(self, e):
        return self.element_areas[e]

    def element_centroid(self, e):
        return self.element_centroids[e]

    def set_permeability(self, k):
        """Set per-element permeability from a closure K(x) -> 2x2 or scalar.

        The closure is evaluated at the element centroids.
        """
        for e in range(self.n_elements):
            ke = np.asarray(k(self.element_centroids[e]), dtype=float)
            self.permeability[e] = ke * np.eye(2) if ke.ndim == 0 else ke
        kk = self.permeability
        scale = np.abs(kk).max()
        if np.abs(kk[:, 0, 1] - kk[:, 1, 0]).max() > 1e-12 * scale:
            raise InvalidInputError("permeability tensors must be symmetric")
        det = kk[:, 0, 0] * kk[:, 1, 1] - kk[:, 0, 1] * kk[:, 1, 0]
        if (kk[:, 0, 0] <= 0).any() or (det <= 0).any():
            bad = int(np.nonzero((kk[:, 0, 0] <= 0) | (det <= 0))[0][0])
            raise InvalidInputError(f"permeability of element {bad} not positive definite")

    def marker_id(self, name):
        if name not in self.marker_names:
            self.marker_names.append(name)
        return self.marker_names.index(name)

    def all_edges(self):
        """(sorted vertex pairs, element id) for every element edge."""
        pairs, owners = [], []
        for ids, n in ((np.nonzero(self.n_corners == 3)[0], 3),
                       (np.nonzero(self.n_corners == 4)[0], 4)):
            if not len(ids):
                continue
            conn = self.elements[ids, :n]
            for k in range(n):
                a, b = conn[:, k], conn[:, (k + 1) % n]
                pairs.append(np.sort(np.column_stack([a, b]), axis=1))
                owners.append(ids)
        return np.concatenate(pairs), np.concatenate(owners)

    def _validate(self):
        if (self.element_areas <= 0).any():
            bad = int(np.argmin(self.element_areas))
            raise MeshError(f"element {bad} has non-positive area (not CCW?)")
        pairs, owners = self.all_edges()
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs, owners = pairs[order], owners[order]
        uniq, start, count = np.unique(pairs, axis=0, return_index=True,
                                       return_counts=True)
        self._edge_lookup = {tuple(p): (int(owners[s]), int(c))
                             for p, s, c in zip(uniq, start, count)}
        for be, (p, q) in enumerate(self.boundary_edges):
            rec = self._edge_lookup.get(tuple(sorted((int(p), int(q)))))
            if rec is None or rec[1] != 1:
                raise MeshError(f"boundary edge {be} is not a unique element edge")
        used = np.unique(self.elements[self.elements >= 0])
        if len(used) != self.n_vertices or used.max() + 1 != self.n_vertices:
            raise MeshError("vertex set does not match element corners")


# ---------------------------------------------------------------------------
# basis functions (P1 on triangles, bilinear on quadrilaterals)
# ---------------------------------------------------------------------------

# reference-space dual geometry: scv corners and scvf endpoints
_TRI_REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_QUAD_REF = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def _tri_shape(lam):
    return lam  # barycentric coordinates are the P1 values


def _quad_shape(xi):
    a, b = xi[..., 0], xi[..., 1]
    val = np.stack([(1 - a) * (1 - b), a * (1 - b), a * b, (1 - a) * b], axis=-1)
    dn = np.stack([
        np.stack([-(1 - b), -(1 - a)], axis=-1),
        np.stack([(1 - b), -a], axis=-1),
        np.stack([b, a], axis=-1),
        np.stack([-b, (1 - a)], axis=-1),
    ], axis=-2)
    return val, dn


def _invert_2x2(m):
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1]
    inv[..., 1, 1] = m[..., 0, 0]
    inv[..., 0, 1] = -m[..., 0, 1]
    inv[..., 1, 0] = -m[..., 1, 0]
    return inv / det[..., None, None]


def _invert_bilinear(pts, x, tol=1e-13):
    """Reference coordinates of points x in bilinear quads (batched Newton)."""
    xi = np.full(x.shape, 0.5)
    for _ in range(30):
        val, dn = _quad_shape(xi)
        r = np.einsum("...k,...kd->...d", val, pts) - x
        if np.abs(r).max() < tol:
            break
        jac = np.einsum("...kd,...ke->...ed", dn, pts)  # jac[e, d] = dx_e / dxi_d
        xi = xi - np.einsum("...de,...e->...d", _invert_2x2(jac), r)
    return xi


def eval_basis(mesh: BoxMesh, e: int, point, tol=1e-10):
    """Basis values and gradients of element e at a physical point.

    Returns (values, gradients) with one row per element corner.  Raises
    GeometryError if the point lies outside the element.
    """
    corners = mesh.corners(e)
    pts = mesh.vertices[corners]
    point = np.asarray(point, dtype=float)
    if len(corners) == 3:
        mat = np.column_stack([pts[1] - pts[0], pts[2] - pts[0]])
        lam12 = np.linalg.solve(mat, point - pts[0])
        lam = np.array([1 - lam12.sum(), lam12[0], lam12[1]])
        if lam.min() < -tol or lam.max() > 1 + tol:
            raise GeometryError(f"point {point} outside element {e}")
        inv = np.linalg.inv(mat).T
        grad = np.vstack([-(inv[:, 0] + inv[:, 1]), inv[:, 0], inv[:, 1]])
        return lam, grad
    xi = _invert_bilinear(pts[None], point[None])[0]
    if xi.min() < -tol or xi.max() > 1 + tol:
        raise GeometryError(f"point {point} outside element {e}")
    val, dn = _quad_shape(xi)
    jac = np.einsum("kd,ke->ed", dn, pts)  # jac[e, d] = dx_e / dxi_d
    grad = dn @ _invert_2x2(jac)
    return val, grad


# ---------------------------------------------------------------------------
# dual topology (box scheme geometry)
# ---------------------------------------------------------------------------


@dataclass
class BoundarySubFace:
    """One half of a boundary edge, owned by one of its endpoint vertices."""

    edge: int           # index into mesh.boundary_edges
    vertex: int         # owning vertex
    element: int        # the unique element containing the edge
    p0: np.ndarray      # endpoint at the owning vertex
    p1: np.ndarray      # edge midpoint
    measure: float
    normal: np.ndarray  # outward unit normal
    marker: int


class DualTopology:
    """Vertex-centered dual of a :class:`BoxMesh`.

    Per element: scv measures/centroids (one scv per corner) and interior
    scvfs (centroid to edge midpoint) with integration point, measure and a
    unit normal oriented from the lower-global-index corner scv to the
    higher one.  Basis values and gradients are tabulated at the scvf
    integration points.  Arrays are padded to 4 corners; ``scvf_valid``
    marks real entries for triangles.
    """

    def __init__(self, mesh: BoxMesh):
        self.mesh = mesh
        ne = mesh.n_elements
        self.scv_measure = np.zeros((ne, 4))
        self.scv_centroid = np.zeros((ne, 4, 2))
        self.scvf_ip = np.zeros((ne, 4, 2))
        self.scvf_normal = np.zeros((ne, 4, 2))
        self.scvf_measure = np.zeros((ne, 4))
        self.scvf_pair = np.zeros((ne, 4, 2), dtype=np.int64)  # local corner ids
        self.scvf_valid = np.zeros((ne, 4), dtype=bool)
        self.basis_val = np.zeros((ne, 4, 4))    # [elem, scvf, corner]
        self.basis_grad = np.zeros((ne, 4, 4, 2))
        self.element_center = mesh.element_centroids

        for n in (3, 4):
            ids = np.nonzero(mesh.n_corners == n)[0]
            if len(ids):
                self._build_batch(ids, n)

        self.vertex_cv_measure = np.zeros(mesh.n_vertices)
        for n in (3, 4):
            ids = np.nonzero(mesh.n_corners == n)[0]
            if len(ids):
                np.add.at(self.vertex_cv_measure,
                          mesh.elements[ids, :n].ravel(),
                          self.scv_measure[ids, :n].ravel())

        self.boundary_subfaces = self._build_boundary_subfaces()
        self._check_invariants()

    def _build_batch(self, ids, n):
        mesh = self.mesh
        conn = mesh.elements[ids, :n]
        pts = mesh.vertices[conn]                       # (m, n, 2)
        g = mesh.element_centroids[ids]                 # (m, 2)
        mids = 0.5 * (pts + np.roll(pts, -1, axis=1))   # edge k = (k, k+1)

        for k in range(n):
            prev = mids[:, (k - 1) % n]
            scv = np.stack([pts[:, k], mids[:, k], g, prev], axis=1)
            area = polygon_area(scv)
            if (area <= 0).any():
                bad = ids[int(np.argmin(area))]
                raise MeshError(f"element {bad}: degenerate sub-control volume")
            self.scv_measure[ids, k] = area
            self.scv_centroid[ids, k] = scv.mean(axis=1)

        for k in range(n):
            a, b = k, (k + 1) % n
            seg = mids[:, k] - g
            length = np.hypot(seg[:, 0], seg[:, 1])
            nrm = np.stack([seg[:, 1], -seg[:, 0]], axis=1) / length[:, None]
            swap = conn[:, a] > conn[:, b]
            lo = np.where(swap, b, a)
            hi = np.where(swap, a, b)
            d = pts[np.arange(len(ids)), hi] - pts[np.arange(len(ids)), lo]
            flip = np.einsum("md,md->m", nrm, d) < 0
            nrm[flip] = -nrm[flip]
            ip = 0.5 * (g + mids[:, k])
            self.scvf_ip[ids, k] = ip
            self.scvf_normal[ids, k] = nrm
            self.scvf_measure[ids, k] = length
            self.scvf_pair[ids, k, 0] = lo
            self.scvf_pair[ids, k, 1] = hi
            self.scvf_valid[ids, k] = True

            if n == 3:
                lam = np.zeros((len(ids), 3))
                lam[:] = 1.0 / 6.0
                lam[:, a] += 0.25
                lam[:, b] += 0.25  # barycentric coords of the scvf midpoint
                self.basis_val[ids, k, :3] = lam
                e0 = pts[:, 1] - pts[:, 0]
                e1 = pts[:, 2] - pts[:, 0]
                mat = np.stack([e0, e1], axis=-1)       # columns
                invt = np.swapaxes(_invert_2x2(mat), -1, -2)
                g1 = invt[..., 0]
                g2 = invt[..., 1]
                self.basis_grad[ids, k, 0] = -(g1 + g2)
                self.basis_grad[ids, k, 1] = g1
                self.basis_grad[ids, k, 2] = g2
            else:
                xi = _invert_bilinear(pts, ip)
                val, dn = _quad_shape(xi)
                jac = np.einsum("mkd,mke->med", dn, pts)
                grad = np.einsum("mkd,mde->mke", dn, _invert_2x2(jac))
                self.basis_val[ids, k, :4] = val
                self.basis_grad[ids, k, :4] = grad

    def _build_boundary_subfaces(self):
        mesh = self.mesh
        subfaces = []
        for be, (p, q) in enumerate(mesh.boundary_edges):
            p, q = int(p), int(q)
            elem = mesh._edge_lookup[tuple(sorted((p, q)))][0]
            xp, xq = mesh.vertices[p], mesh.vertices[q]
            mid = 0.5 * (xp + xq)
            t = xq - xp
            nrm = np.array([t[1], -t[0]])
            nrm /= np.hypot(*nrm)
            if np.dot(nrm, mid - mesh.element_centroids[elem]) < 0:
                nrm = -nrm
            half = 0.5 * np.hypot(*t)
            marker = int(mesh.boundary_markers[be])
            subfaces.append(BoundarySubFace(be, p, elem, xp, mid, half, nrm, marker))
            subfaces.append(BoundarySubFace(be, q, elem, xq, mid, half, nrm, marker))
        return subfaces

    def _check_invariants(self):
        mesh = self.mesh
        scv_sum = self.scv_measure.sum(axis=1)
        rel = np.abs(scv_sum - mesh.element_areas) / mesh.element_areas
        if rel.max() > 1e-12:
            raise MeshError(f"element {int(np.argmax(rel))}: scvs do not partition |E|")
        total = mesh.element_areas.sum()
        if abs(self.vertex_cv_measure.sum() - total) > 1e-12 * total:
            raise MeshError("control volumes do not partition the domain")


def build_dual_topology(mesh: BoxMesh) -> DualTopology:
    return DualTopology(mesh)


# ---------------------------------------------------------------------------
# porous-grid generators
# ---------------------------------------------------------------------------


def _offset_layout(a, b, n):
    """n+2 coordinates: half-cell columns at the ends, unit cells inside."""
    h = (b - a) / n
    return np.concatenate([[a], a + h / 2 + h * np.arange(n), [b]])


def interface_layout(a, b, h_ff, f_gamma):
    """1-D vertex layout along a coupled side for simplex grids.

    Interior segments of ~f_gamma * h_ff, half-length corner segments at
    both ends.  The interior count is rounded so the layout ends at b.
    """
    if not 0 < f_gamma <= 1:
        raise InvalidInputError(f"interface factor must be in (0, 1], got {f_gamma}")
    length = b - a
    inner = length - h_ff  # two corner segments of h_ff / 2
    n = max(1, int(round(inner / (f_gamma * h_ff))))
    step = inner / n
    return np.concatenate([[a], a + h_ff / 2 + step * np.arange(n + 1), [b]])


def _rect_boundary(vid, marker_names):
    nxv, nyv = vid.shape
    edges, markers = [], []
    side = {name: marker_names.index(name) for name in ("left", "right", "bottom", "top")}
    for i in range(nxv - 1):
        edges.append([vid[i, 0], vid[i + 1, 0]]); markers.append(side["bottom"])
        edges.append([vid[i, nyv - 1], vid[i + 1, nyv - 1]]); markers.append(side["top"])
    for j in range(nyv - 1):
        edges.append([vid[0, j], vid[0, j + 1]]); markers.append(side["left"])
        edges.append([vid[nxv - 1, j], vid[nxv - 1, j + 1]]); markers.append(side["right"])
    return np.array(edges), np.array(markers)


def _quads_from_layout(xs, ys, marker_names):
    nxv, nyv = len(xs), len(ys)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])
    vid = np.arange(nxv * nyv).reshape(nxv, nyv)
    a = vid[:-1, :-1].ravel()
    b = vid[1:, :-1].ravel()
    c = vid[1:, 1:].ravel()
    d = vid[:-1, 1:].ravel()
    elems = np.column_stack([a, b, c, d])
    b_edges, b_markers = _rect_boundary(vid, marker_names)
    return verts, elems, b_edges, b_markers, vid


def generate_pm_grid(kind, rect, nx, ny, *, f_gamma=1.0, coupling_sides=("top",)):
    """Generate the porous-medium primary grid for one of the study layouts.

    kind 'conforming':      nx x ny quads matching the free-flow footprint.
    kind 'box_conforming':  quads offset by half a cell so the dual control
                            volume boundaries line up with free-flow faces.
    kind 'simplex':         structured triangulation; vertex spacing along
                            each coupled side is ~f_gamma times the
                            free-flow spacing, with half-length corner
                            segments.

    Edges on ``coupling_sides`` are re-marked 'coupling'.
    """
    x0, y0, x1, y1 = map(float, rect)
    if x1 <= x0 or y1 <= y0 or nx < 1 or ny < 1:
        raise InvalidInputError(f"bad rectangle {rect} or counts {nx}x{ny}")
    if f_gamma <= 0:
        raise InvalidInputError(f"interface factor must be positive, got {f_gamma}")
    if f_gamma < 1 and kind != "simplex":
        raise InvalidInputError("f_gamma < 1 requires kind='simplex'")
    marker_names = ["left", "right", "bottom", "top", "coupling"]
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny

    if kind == "conforming":
        xs = np.linspace(x0, x1, nx + 1)
        ys = np.linspace(y0, y1, ny + 1)
        verts, elems, bedges, bmarks, _ = _quads_from_layout(xs, ys, marker_names)
    elif kind == "box_conforming":
        xs = _offset_layout(x0, x1, nx)
        ys = _offset_layout(y0, y1, ny)
        verts, elems, bedges, bmarks, _ = _quads_from_layout(xs, ys, marker_names)
    elif kind == "simplex":
        xs = interface_layout(x0, x1, hx, f_gamma) \
            if ("top" in coupling_sides or "bottom" in coupling_sides) \
            else np.linspace(x0, x1, nx + 1)
        ys = interface_layout(y0, y1, hy, f_gamma) \
            if ("left" in coupling_sides or "right" in coupling_sides) \
            else np.linspace(y0, y1, ny + 1)
        verts, quads, bedges, bmarks, _ = _quads_from_layout(xs, ys, marker_names)
        nyc = len(ys) - 1
        q = np.arange(len(quads))
        i, j = q // nyc, q % nyc
        even = (i + j) % 2 == 0  # alternate diagonals to avoid directional bias
        a, b, c, d = quads.T
        tris = np.empty((2 * len(quads), 3), dtype=np.int64)
        tris[0::2] = np.where(even[:, None],
                              np.column_stack([a, b, c]),
                              np.column_stack([a, b, d]))
        tris[1::2] = np.where(even[:, None],
                              np.column_stack([a, c, d]),
                              np.column_stack([b, c, d]))
        elems = tris
    else:
        raise InvalidInputError(f"unknown grid kind {kind!r}")

    coup = marker_names.index("coupling")
    side_ids = [marker_names.index(s) for s in coupling_sides]
    bmarks = np.where(np.isin(bmarks, side_ids), coup, bmarks)
    return BoxMesh(verts, elems, bedges, bmarks, marker_names)


# ---------------------------------------------------------------------------
# mesh file exchange
# ---------------------------------------------------------------------------


def save_mesh(mesh: BoxMesh, path):
    """Plain-text mesh format: counts header, vertices, elements, boundary."""
    with open(path, "w") as f:
        f.write(f"{mesh.n_vertices} {mesh.n_elements} {len(mesh.boundary_edges)}\n")
        f.write(" ".join(mesh.marker_names) + "\n")
        for x, y in mesh.vertices:
            f.write(f"{x!r} {y!r}\n")
        for e in range(mesh.n_elements):
            c = mesh.corners(e)
            f.write(f"{len(c)} " + " ".join(str(int(v)) for v in c) + "\n")
        for (p, q), m in zip(mesh.boundary_edges, mesh.boundary_markers):
            f.write(f"{p} {q} {m}\n")


def load_mesh(path) -> BoxMesh:
    with open(path) as f:
        nv, ne, nb = map(int, f.readline().split())
        marker_names = f.readline().split()
        verts = np.array([list(map(float, f.readline().split())) for _ in range(nv)])
        elems = []
        for _ in range(ne):
            vals = list(map(int, f.readline().split()))
            conn = vals[1:1 + vals[0]]
            elems.append(conn + [-1] * (4 - len(conn)))
        bedges, bmarks = [], []
        for _ in range(nb):
            p, q, m = map(int, f.readline().split())
            bedges.append([p, q]); bmarks.append(m)
    return BoxMesh(verts, np.array(elems), np.array(bedges), np.array(bmarks),
                   marker_names)


def export_mesh_csv(mesh: BoxMesh, path_prefix):
    """Write vertices and cell connectivity as CSV for external plotting."""
    np.savetxt(f"{path_prefix}_vertices.csv", mesh.vertices,
               delimiter=",", header="x,y", comments="")
    with open(f"{path_prefix}_cells.csv", "w") as f:
        f.write("v0,v1,v2,v3\n")
        for e in range(mesh.n_elements):
            f.write(",".join(str(int(v)) for v in mesh.elements[e]) + "\n")


# ---------------------------------------------------------------------------
# interface facets
# ---------------------------------------------------------------------------


@dataclass
class InterfaceFacet:
    """1-D overlap between a free-flow face and a porous boundary sub-face."""

    lo: float               # endpoints along the interface line
    hi: float
    axis: int               # 0: interface runs along x, 1: along y
    line: float             # fixed coordinate of the interface line
    ff_kind: str            # 'v' for horizontal interfaces, 'u' for vertical
    ff_i: int
    ff_j: int
    pm_vertex: int
    pm_element: int
    pm_subface: int         # index into dual.boundary_subfaces
    n_ff: np.ndarray        # outward unit normal of the free-flow domain
    trace_w: np.ndarray = field(default=None)  # filled by the coupling module

    @property
    def measure(self):
        return self.hi - self.lo

    def midpoint(self):
        s = 0.5 * (self.lo + self.hi)
        return np.array([s, self.line]) if self.axis == 0 else np.array([self.line, s])


def _ff_coupling_faces_on_line(grid, marker_ids, axis, line, tol):
    """Coupling-marked staggered faces lying on a given axis line."""
    faces = []
    if axis == 0:  # horizontal line y = line -> y-faces carry the normal DOF
        _, y = grid.yface_centers()
        for i, j in zip(*np.nonzero(np.isin(grid.yface_marker, marker_ids))):
            if abs(y[j] - line) <= tol:
                lo = grid.x0 + i * grid.dx
                below_active = j > 0 and grid.active[i, j - 1]
                n = np.array([0.0, 1.0]) if below_active else np.array([0.0, -1.0])
                faces.append(("v", int(i), int(j), lo, lo + grid.dx, n))
    else:  # vertical line x = line -> x-faces
        x, _ = grid.xface_centers()
        for i, j in zip(*np.nonzero(np.isin(grid.xface_marker, marker_ids))):
            if abs(x[i] - line) <= tol:
                lo = grid.y0 + j * grid.dy
                west_active = i > 0 and grid.active[i - 1, j]
                n = np.array([1.0, 0.0]) if west_active else np.array([-1.0, 0.0])
                faces.append(("u", int(i), int(j), lo, lo + grid.dy, n))
    return faces


def intersect_interface(ff: StaggeredGrid, pm: DualTopology, segment,
                        ff_markers=("coupling",), pm_markers=("coupling",)):
    """Decompose one straight interface segment into facets.

    ``segment`` is ((xa, ya), (xb, yb)) and must be axis-aligned.  The
    coupling-marked free-flow faces and porous boundary sub-faces on the
    segment are paired by 1-D overlap; the facets tile the segment.
    """
    (xa, ya), (xb, yb) = segment
    if abs(ya - yb) <= 1e-14 * max(1.0, abs(ya)):
        axis, line, lo_s, hi_s = 0, ya, min(xa, xb), max(xa, xb)
    elif abs(xa - xb) <= 1e-14 * max(1.0, abs(xa)):
        axis, line, lo_s, hi_s = 1, xa, min(ya, yb), max(ya, yb)
    else:
        raise GeometryError(f"interface segment {segment} not axis-aligned")
    tol = 1e-10 * (hi_s - lo_s)

    ff_ids = [ff.marker_names.index(m) for m in ff_markers if m in ff.marker_names]
    faces = [f for f in _ff_coupling_faces_on_line(ff, ff_ids, axis, line, tol)
             if f[3] >= lo_s - tol and f[4] <= hi_s + tol]

    pm_ids = [pm.mesh.marker_names.index(m) for m in pm_markers
              if m in pm.mesh.marker_names]
    subs = []
    for s, sf in enumerate(pm.boundary_subfaces):
        if sf.marker not in pm_ids:
            continue
        pts = np.array([sf.p0, sf.p1])
        if np.abs(pts[:, 1 - axis] - line).max() > tol:
            continue  # on some other part of the coupling boundary
        a, b = sorted(pts[:, axis])
        if a >= lo_s - tol and b <= hi_s + tol:
            subs.append((s, a, b))
    if not faces or not subs:
        raise ConfigError("no coupling faces / sub-faces found on the segment")

    cover = sum(f[4] - f[3] for f in faces)
    if abs(cover - (hi_s - lo_s)) > 1e-12 * (hi_s - lo_s):
        raise GeometryError("free-flow coupling faces do not tile the segment")
    cover = sum(b - a for _, a, b in subs)
    if abs(cover - (hi_s - lo_s)) > 1e-12 * (hi_s - lo_s):
        raise GeometryError("porous boundary sub-faces do not tile the segment")

    facets = []
    for kind, i, j, flo, fhi, n in faces:
        for s, a, b in subs:
            lo, hi = max(flo, a), min(fhi, b)
            if hi - lo > tol:
                sf = pm.boundary_subfaces[s]
                facets.append(InterfaceFacet(lo, hi, axis, line, kind, i, j,
                                             sf.vertex, sf.element, s, n))
    facets.sort(key=lambda g: g.lo)
    total = sum(g.measure for g in facets)
    if abs(total - (hi_s - lo_s)) > 1e-12 * (hi_s - lo_s):
        raise GeometryError("facets do not tile the interface segment")
    return facets
