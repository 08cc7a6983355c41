"""Div-conforming RWG and dual (Buffa-Christiansen style) bases.

The dual basis lives on the barycentric refinement as a sparse coefficient
combination of refined RWG functions.  Each dual function associated with a
coarse edge carries unit charge (+1 / -1, matching the vertex-edge incidence
signs) spread uniformly over the barycentric cells around the two edge
endpoints, with the crossing current split equally between the two spokes
through the edge midpoint.  This reproduces the essential algebraic
properties of the classical construction: the charge of a combination with
coefficient vector x per vertex cell is (Lambda^T x), so solenoidal
coefficient vectors are exactly the divergence-free combinations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import lu_factor, lu_solve

from .quadrature import triangle_rule, physical_points


@dataclass
class RwgBasis:
    """RWG functions on a mesh, one per edge.

    Local data is laid out per (triangle, local edge) so assembly loops can
    evaluate all three functions supported on a triangle at once; local edge
    k is opposite local vertex k.
    """

    mesh: object
    sign: np.ndarray       # (N_C, 3), +1 where the triangle is c_plus
    opp_vertex: np.ndarray  # (N_C, 3) vertex opposite the local edge
    areas: np.ndarray

    @property
    def num_functions(self):
        return self.mesh.num_edges

    def eval_local(self, tri_indices, points):
        """Values of the three local RWG functions on given triangles.

        points: (len(tri_indices), nq, 3) physical points lying in the
        triangles.  Returns (len(tri_indices), 3, nq, 3).
        """
        opp = self.mesh.vertices[self.opp_vertex[tri_indices]]  # (nt, 3, 3)
        d = points[:, None, :, :] - opp[:, :, None, :]
        scale = self.sign[tri_indices] / (2.0 * self.areas[tri_indices, None])
        return scale[:, :, None, None] * d

    def div_local(self, tri_indices):
        """Surface divergence of the local functions, (nt, 3) constants."""
        return self.sign[tri_indices] / self.areas[tri_indices, None]

    def evaluate(self, coeffs, tri_index, points):
        """Current density sum_n coeffs[n] f_n at points inside one triangle."""
        pts = np.atleast_2d(points)[None, :, :]
        vals = self.eval_local(np.array([tri_index]), pts)[0]  # (3, nq, 3)
        local_coeffs = coeffs[self.mesh.tri_edges[tri_index]]
        return np.einsum("k,kqd->qd", local_coeffs, vals)


def build_rwg(mesh):
    sign = np.where(
        mesh.edge_tris[mesh.tri_edges, 0] == np.arange(mesh.num_triangles)[:, None],
        1.0,
        -1.0,
    )
    opp = mesh.triangles.copy()  # local edge k is opposite local vertex k
    return RwgBasis(mesh, sign, opp, mesh.areas())


@dataclass
class BcBasis:
    """Dual div-conforming basis as refined-RWG coefficient columns."""

    mesh: object          # coarse mesh
    refined: object
    maps: object
    coeffs: sparse.csr_matrix  # (N_E_refined, N_E_coarse)

    @property
    def num_functions(self):
        return self.mesh.num_edges


def _refined_edge_lookup(refined):
    table = {}
    for idx, (a, b) in enumerate(refined.edges):
        table[(int(a), int(b))] = idx
    return table


def _fan_entries(refined, edge_table, vertex, start_neighbor, lam):
    """Coefficients of the radial refined RWG fan around one coarse vertex.

    The circulation profile steps by lam/(2N) per fan triangle, with the two
    spoke injections of lam/2 absorbed at the triangles adjacent to the
    reference half-edge; the on-edge radial function carries no flow.
    """
    ring = refined.triangles_around_vertex(vertex)
    two_n = len(ring)
    start = next(i for i, (_, x0, _) in enumerate(ring) if x0 == start_neighbor)
    ring = ring[start:] + ring[:start]

    entries = []
    w = 0.0
    for k in range(1, two_n):
        w += lam / two_n
        if k == 1:
            w -= lam / 2.0
        x = ring[k][1]
        prev_tri = ring[k - 1][0]
        lo, hi = (vertex, x) if vertex < x else (x, vertex)
        ridx = edge_table[(lo, hi)]
        # positive RWG coefficient drives current from c_plus to c_minus
        coeff = w if refined.edge_tris[ridx, 0] == prev_tri else -w
        entries.append((ridx, coeff))
    return entries


def build_bc(mesh, refined, maps):
    """Dual basis coefficients over the refined RWG functions."""
    edge_table = _refined_edge_lookup(refined)
    rows, cols, vals = [], [], []

    for e in range(mesh.num_edges):
        va, vb = mesh.edges[e]          # (v_minus, v_plus): charge -1 at va, +1 at vb
        cp, cm = mesh.edge_tris[e]
        m_e = int(maps.midpoint_vertex[e])

        # spokes from the edge midpoint to the two barycenters, carrying
        # half of the unit current each, directed out of the v_plus cell
        for c_face in (cp, cm):
            g = int(maps.barycenter_vertex[c_face])
            lo, hi = (m_e, g) if m_e < g else (g, m_e)
            ridx = edge_table[(lo, hi)]
            c_plus_tri = refined.edge_tris[ridx, 0]
            # which side of the spoke contains v_plus (vb)?
            vb_side = vb in refined.triangles[c_plus_tri]
            coeff = 0.5 if vb_side else -0.5
            rows.append(ridx)
            cols.append(e)
            vals.append(coeff)

        for vertex, lam in ((int(va), -1.0), (int(vb), 1.0)):
            for ridx, coeff in _fan_entries(refined, edge_table, vertex, m_e, lam):
                rows.append(ridx)
                cols.append(e)
                vals.append(coeff)

    coeffs = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(refined.num_edges, mesh.num_edges)
    )
    return BcBasis(mesh, refined, maps, coeffs)


class GramMatrix:
    """Mixed Gram matrix <n x g_m, f_n> with a cached LU factorization."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix)
        self._lu = lu_factor(self.matrix)

    def solve(self, b):
        return lu_solve(self._lu, b)

    def solve_t(self, b):
        return lu_solve(self._lu, b, trans=1)

    def condition_number(self):
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return s[0] / s[-1]


def assemble_gram_rotated(test_mesh, test_rwg, trial_mesh, trial_rwg,
                          parent_of_test=None, order=4):
    """<n x f_m(test), f_n(trial)> for meshes sharing the same surface.

    When test_mesh is a barycentric refinement of trial_mesh, parent_of_test
    maps each test triangle to the coarse triangle containing it; with
    parent_of_test None both arguments must be the same mesh.
    """
    if parent_of_test is None:
        parent_of_test = np.arange(test_mesh.num_triangles)
    bary, w = triangle_rule(order)
    pts = physical_points(test_mesh.triangle_points(), bary)
    weights = w[None, :] * test_mesh.areas()[:, None]
    normals = test_mesh.normals()

    nt = test_mesh.num_triangles
    tris = np.arange(nt)
    f_test = test_rwg.eval_local(tris, pts)            # (nt, 3, nq, 3)
    f_trial = trial_rwg.eval_local(parent_of_test, pts)
    rotated = np.cross(normals[:, None, None, :], f_test)
    block = np.einsum("tkqd,tlqd,tq->tkl", rotated, f_trial, weights)

    out = np.zeros((test_mesh.num_edges, trial_mesh.num_edges))
    rows = test_mesh.tri_edges[:, :, None]
    cols = trial_mesh.tri_edges[parent_of_test][:, None, :]
    np.add.at(out, (rows, cols), block)
    return out


def assemble_gram_mixed(bc, rwg, order=4):
    """Dense mixed Gram matrix <n x g_m, f_n> as a GramMatrix."""
    refined = bc.refined
    ref_rwg = build_rwg(refined)
    g_ref = assemble_gram_rotated(
        refined, ref_rwg, bc.mesh, rwg, parent_of_test=bc.maps.child_tri_parent,
        order=order,
    )
    g = bc.coeffs.T @ g_ref
    try:
        return GramMatrix(g)
    except Exception as exc:  # singular factorization
        raise RuntimeError(f"mixed Gram matrix is singular: {exc}") from exc
