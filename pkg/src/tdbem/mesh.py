"""Triangular surface meshes, generators, refinement and incidence matrices.

Meshes are closed, consistently oriented 2-manifold triangulations.  All
connectivity (edge table, adjacent triangle pairs, loop/star incidence
matrices) is derived once at construction time and treated as immutable
afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


class MeshError(ValueError):
    """Raised when a mesh violates a structural invariant."""


@dataclass
class TriangleMesh:
    """Closed oriented triangle mesh with full edge connectivity.

    Attributes
    ----------
    vertices : (N_V, 3) float array
        Vertex positions in meters.
    triangles : (N_C, 3) int array
        Vertex index triples, counter-clockwise w.r.t. the outward normal.
    edges : (N_E, 2) int array
        Ordered vertex pair (v_minus, v_plus) per edge.
    edge_tris : (N_E, 2) int array
        Adjacent triangle pair (c_plus, c_minus); c_plus is the triangle in
        which the directed edge v_minus -> v_plus appears counter-clockwise.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray = field(init=False)
    edge_tris: np.ndarray = field(init=False)
    tri_edges: np.ndarray = field(init=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=int)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (N_V, 3) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (N_C, 3) array")
        self._check_duplicate_vertices()
        self._build_edges()
        self._check_geometry()

    # -- construction helpers -------------------------------------------------

    def _check_duplicate_vertices(self):
        rounded = np.round(self.vertices, 12)
        _, counts = np.unique(rounded, axis=0, return_counts=True)
        if np.any(counts > 1):
            dup = np.nonzero(counts > 1)[0][0]
            raise MeshError(f"duplicate vertex position (group {dup})")

    def _build_edges(self):
        nc = len(self.triangles)
        # directed edges per triangle, in CCW order
        directed = {}
        for c, (a, b, d) in enumerate(self.triangles):
            for u, v in ((a, b), (b, d), (d, a)):
                if (u, v) in directed:
                    raise MeshError(
                        f"directed edge ({u},{v}) repeated: inconsistent "
                        f"orientation or non-manifold at triangle {c}"
                    )
                directed[(u, v)] = c

        edge_index = {}
        edges = []
        edge_tris = []
        for (u, v), c_plus in directed.items():
            if u > v:
                continue
            if (v, u) not in directed:
                raise MeshError(f"boundary edge ({u},{v}): surface is not closed")
            edge_index[(u, v)] = len(edges)
            edges.append((u, v))
            edge_tris.append((c_plus, directed[(v, u)]))
        if 2 * len(edges) != len(directed):
            raise MeshError("non-manifold edge present")

        self.edges = np.array(edges, dtype=int)
        self.edge_tris = np.array(edge_tris, dtype=int)

        # per-triangle edge indices, local edge k is opposite local vertex k
        self.tri_edges = np.empty((nc, 3), dtype=int)
        for c, (a, b, d) in enumerate(self.triangles):
            for k, (u, v) in enumerate(((b, d), (d, a), (a, b))):
                self.tri_edges[c, k] = edge_index[(min(u, v), max(u, v))]

    def _check_geometry(self):
        if np.any(self.areas() <= 0.0):
            c = int(np.argmin(self.areas()))
            raise MeshError(f"degenerate triangle {c}")

    # -- basic quantities ------------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def euler_characteristic(self):
        return self.num_vertices - self.num_edges + self.num_triangles

    @property
    def harmonic_dimension(self):
        """Dimension of the space of global loops, 2 - Euler characteristic."""
        return 2 - self.euler_characteristic

    def triangle_points(self, c=None):
        tris = self.triangles if c is None else self.triangles[c]
        return self.vertices[tris]

    def areas(self):
        p = self.vertices[self.triangles]
        cr = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return 0.5 * np.linalg.norm(cr, axis=1)

    def normals(self):
        p = self.vertices[self.triangles]
        cr = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return cr / np.linalg.norm(cr, axis=1, keepdims=True)

    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    def mean_edge_length(self):
        return float(np.mean(self.edge_lengths()))

    def diameter(self):
        """Maximal pairwise vertex distance (exact, O(N_V^2))."""
        v = self.vertices
        d2 = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=2)
        return float(np.sqrt(d2.max()))

    def triangles_around_vertex(self, v):
        """Triangles incident to vertex v, in CCW order around the vertex.

        Returns a list of (triangle index, previous neighbor, next neighbor)
        where the neighbors are the other two vertices of the triangle in CCW
        order as seen around v.
        """
        incident = {}
        for c in np.nonzero(np.any(self.triangles == v, axis=1))[0]:
            a, b, d = self.triangles[c]
            if a == v:
                incident[b] = (int(c), int(b), int(d))
            elif b == v:
                incident[d] = (int(c), int(d), int(a))
            else:
                incident[a] = (int(c), int(a), int(b))
        start = next(iter(incident))
        order = []
        x = start
        while True:
            c, x0, x1 = incident[x]
            order.append((c, x0, x1))
            x = x1
            if x == start:
                break
            if len(order) > len(incident):
                raise MeshError(f"vertex {v} has a non-disk neighborhood")
        if len(order) != len(incident):
            raise MeshError(f"vertex {v} has a non-disk neighborhood")
        return order


# -- incidence matrices -------------------------------------------------------


def connectivity_lambda(mesh):
    """Vertex-edge incidence: row m has +1 at v_plus, -1 at v_minus."""
    ne = mesh.num_edges
    rows = np.repeat(np.arange(ne), 2)
    cols = mesh.edges[:, ::-1].ravel()  # (v_plus, v_minus) per row
    vals = np.tile([1.0, -1.0], ne)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(ne, mesh.num_vertices))


def connectivity_sigma(mesh):
    """Face-edge incidence: row m has +1 at c_plus, -1 at c_minus."""
    ne = mesh.num_edges
    rows = np.repeat(np.arange(ne), 2)
    cols = mesh.edge_tris.ravel()
    vals = np.tile([1.0, -1.0], ne)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(ne, mesh.num_triangles))


# -- generators ----------------------------------------------------------------

_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array(
    [
        (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
        (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
        (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
    ],
    dtype=float,
)

_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=int,
)


def generate_sphere(radius, target_edge_length):
    """Icosahedral sphere mesh with mean edge length near the target."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 < target_edge_length < radius:
        raise ValueError("target edge length must lie in (0, radius)")
    # icosahedron edge on the unit sphere is ~1.0515; split each edge n times
    n = max(1, int(round(1.0515 * radius / target_edge_length)))

    verts = list(_ICO_VERTS / np.linalg.norm(_ICO_VERTS[0]))
    vert_ids = {}

    def point_id(p):
        key = tuple(np.round(p, 10))
        if key not in vert_ids:
            vert_ids[key] = len(verts)
            verts.append(p)
        return vert_ids[key]

    for i, p in enumerate(verts):
        vert_ids[tuple(np.round(p, 10))] = i

    tris = []
    for face in _ICO_FACES:
        a, b, c = (np.asarray(verts[k]) for k in face)
        # subdivide the spherical triangle into n^2 planar ones, then project
        grid = {}
        for i in range(n + 1):
            for j in range(n + 1 - i):
                p = a + (b - a) * (i / n) + (c - a) * (j / n)
                p = p / np.linalg.norm(p)
                grid[(i, j)] = point_id(p)
        for i in range(n):
            for j in range(n - i):
                tris.append((grid[(i, j)], grid[(i + 1, j)], grid[(i, j + 1)]))
                if j < n - i - 1:
                    tris.append(
                        (grid[(i + 1, j)], grid[(i + 1, j + 1)], grid[(i, j + 1)])
                    )

    vertices = radius * np.array(verts)
    return TriangleMesh(vertices, np.array(tris, dtype=int))


def generate_torus(major_radius, minor_radius, target_edge_length):
    """Structured torus mesh from an (n_major x n_minor) quad grid."""
    if not major_radius > minor_radius > 0:
        raise ValueError("require major_radius > minor_radius > 0")
    if target_edge_length <= 0:
        raise ValueError("target edge length must be positive")
    n_major = max(3, int(round(2 * np.pi * major_radius / target_edge_length)))
    n_minor = max(3, int(round(2 * np.pi * minor_radius / target_edge_length)))

    verts = np.empty((n_major * n_minor, 3))
    for i in range(n_major):
        u = 2 * np.pi * i / n_major
        for j in range(n_minor):
            v = 2 * np.pi * j / n_minor
            r = major_radius + minor_radius * np.cos(v)
            verts[i * n_minor + j] = (
                r * np.cos(u),
                r * np.sin(u),
                minor_radius * np.sin(v),
            )

    tris = []
    for i in range(n_major):
        i1 = (i + 1) % n_major
        for j in range(n_minor):
            j1 = (j + 1) % n_minor
            p00 = i * n_minor + j
            p10 = i1 * n_minor + j
            p01 = i * n_minor + j1
            p11 = i1 * n_minor + j1
            # outward normal: (u, v) oriented so that du x dv points outward
            tris.append((p00, p10, p11))
            tris.append((p00, p11, p01))
    return TriangleMesh(verts, np.array(tris, dtype=int))


# -- barycentric refinement -----------------------------------------------------


@dataclass
class ParentMaps:
    """Child-to-parent relations of a barycentric refinement.

    child_tri_parent[t] is the coarse triangle containing refined triangle t.
    midpoint_vertex[e] / barycenter_vertex[c] give refined vertex ids of the
    coarse edge midpoints and triangle barycenters.  Coarse vertex ids are
    shared between the two meshes.
    """

    child_tri_parent: np.ndarray
    midpoint_vertex: np.ndarray
    barycenter_vertex: np.ndarray


def barycentric_refinement(mesh):
    """Split each triangle into 6 children through edge midpoints and barycenter."""
    nv, ne, nc = mesh.num_vertices, mesh.num_edges, mesh.num_triangles
    mid = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    bary = mesh.vertices[mesh.triangles].mean(axis=1)
    vertices = np.vstack([mesh.vertices, mid, bary])

    midpoint_vertex = nv + np.arange(ne)
    barycenter_vertex = nv + ne + np.arange(nc)

    tris = np.empty((6 * nc, 3), dtype=int)
    parent = np.repeat(np.arange(nc), 6)
    for c, (a, b, d) in enumerate(mesh.triangles):
        # local edge k is opposite local vertex k
        m_ab = midpoint_vertex[mesh.tri_edges[c, 2]]
        m_bd = midpoint_vertex[mesh.tri_edges[c, 0]]
        m_da = midpoint_vertex[mesh.tri_edges[c, 1]]
        g = barycenter_vertex[c]
        tris[6 * c: 6 * c + 6] = [
            (a, m_ab, g),
            (m_ab, b, g),
            (b, m_bd, g),
            (m_bd, d, g),
            (d, m_da, g),
            (m_da, a, g),
        ]
    refined = TriangleMesh(vertices, tris)
    return refined, ParentMaps(parent, midpoint_vertex, barycenter_vertex)


# -- OFF-style file I/O -----------------------------------------------------------


def save_mesh(mesh, stream):
    """Write an ASCII OFF file."""
    stream.write("OFF\n")
    stream.write(f"{mesh.num_vertices} {mesh.num_triangles} {mesh.num_edges}\n")
    for v in mesh.vertices:
        stream.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
    for t in mesh.triangles:
        stream.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def load_mesh(stream):
    """Read an ASCII OFF file and validate all mesh invariants."""
    tokens = []
    for line in stream:
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError("not an OFF file (missing header)")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4  # skip the edge count
        verts = np.array(tokens[pos: pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        tris = []
        for _ in range(nf):
            cnt = int(tokens[pos])
            if cnt != 3:
                raise MeshError(f"face with {cnt} vertices: only triangles supported")
            tris.append([int(t) for t in tokens[pos + 1: pos + 4]])
            pos += 1 + cnt
    except (IndexError, ValueError) as exc:
        raise MeshError(f"malformed OFF file: {exc}") from exc
    tris = np.array(tris, dtype=int)
    if tris.size and (tris.min() < 0 or tris.max() >= nv):
        raise MeshError("triangle references an undefined vertex")
    return TriangleMesh(verts, tris)
