"""Galerkin pair-integration engine shared by all operator assemblers.

Three interaction kinds are supported, each contracted against div-conforming
local basis data on both meshes:

* "dot":    f_m(r) . f_n(r') k(R)
* "divdiv": div f_m(r) div f_n(r') k(R), assembled per face pair and
            sandwiched with the exact charge incidence so that solenoidal
            coefficient vectors are annihilated to machine precision
* "cross":  f_m(r) . ((r - r') x f_n(r')) w(R)

Pair handling:

* far pairs: tensorized Gauss rules;
* near non-touching pairs: tensorized Gauss on uniformly subdivided panels;
* touching pairs (shared vertex, edge, or identical): regularizing 4D
  coordinate transforms (Sauter-Schwab) with exponential convergence in the
  1D Gauss order;
* with radial splitting enabled, non-touching pairs whose distance range
  straddles a kernel breakpoint are re-integrated with a polar rule whose
  radial variable is segmented exactly at the breakpoint spheres.

Operators tested with functions on a barycentric refinement against sources
on the coarse mesh are assembled entirely on the refined mesh by treating
the source basis as parent functions restricted to the children (PanelSet
with a parent basis), which keeps all touching pairs vertex-matched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .basis import build_rwg
from .quadrature import triangle_rule, physical_points


@dataclass
class QuadratureConfig:
    far_order: int = 4
    near_order: int = 6
    near_levels: int = 1       # uniform subdivisions per panel on near pairs
    near_factor: float = 2.0   # near when centroid distance < factor * (r_t + r_s)
    ss_order: int = 4          # 1D Gauss order of the 4D singular transforms
    polar_order: int = 6       # used by the radial-splitting path
    radial_split: bool = False
    chunk: int = 4096
    near_chunk: int = 256


class PanelSet:
    """Mesh plus local basis data with cached per-order quadrature geometry.

    With a parent mesh given, the integration panels are the (refined) mesh
    triangles but the basis functions are the parent RWG functions restricted
    to the children; matrix columns/rows then index parent edges.
    """

    def __init__(self, mesh, rwg=None, parent_mesh=None, parent_map=None,
                 parent_rwg=None):
        self.mesh = mesh
        self._geo = {}
        pts = mesh.triangle_points()
        self.centroids = pts.mean(axis=1)
        self.radii = np.linalg.norm(pts - self.centroids[:, None, :], axis=2).max(axis=1)

        if parent_mesh is None:
            self.rwg = rwg if rwg is not None else build_rwg(mesh)
            home = np.arange(mesh.num_triangles)
            basis_rwg = self.rwg
            self.scatter_edges = mesh.tri_edges
            self.num_basis = mesh.num_edges
        else:
            basis_rwg = parent_rwg if parent_rwg is not None else build_rwg(parent_mesh)
            self.rwg = basis_rwg
            home = np.asarray(parent_map)
            self.scatter_edges = parent_mesh.tri_edges[home]
            self.num_basis = parent_mesh.num_edges
        # per integration panel: local function data of its basis triangle
        self.basis_sign = basis_rwg.sign[home]
        self.basis_opp = basis_rwg.mesh.vertices[basis_rwg.opp_vertex[home]]
        self.basis_area = basis_rwg.areas[home]

    def basis_at(self, panels, pts):
        """Local basis values at points (m, ..., 3), returned as (m, 3, ..., 3)."""
        extra = pts.ndim - 2  # number of point axes
        opp = self.basis_opp[panels]
        opp = opp.reshape(opp.shape[:2] + (1,) * extra + (3,))
        d = pts[:, None] - opp
        scale = self.basis_sign[panels] / (2.0 * self.basis_area[panels][:, None])
        return scale.reshape(scale.shape + (1,) * (extra + 1)) * d

    def basis_div(self, panels):
        return self.basis_sign[panels] / self.basis_area[panels][:, None]

    def geometry(self, order, levels=0):
        key = (order, levels)
        if key not in self._geo:
            bary, w = triangle_rule(order)
            for _ in range(levels):
                bary, w = _subdivide_rule(bary, w)
            mesh = self.mesh
            pts = physical_points(mesh.triangle_points(), bary)
            d = pts[:, None, :, :] - self.basis_opp[:, :, None, :]
            scale = self.basis_sign / (2.0 * self.basis_area[:, None])
            fvals = scale[:, :, None, None] * d
            self._geo[key] = {
                "points": pts,
                "weights": w[None, :] * mesh.areas()[:, None],
                "fvals": fvals,
                "fdiv": self.basis_sign / self.basis_area[:, None],
            }
        return self._geo[key]

    def charge_incidence(self):
        """Sparse (N_panels, N_basis) map from coefficients to face charge."""
        mesh = self.mesh
        panels = np.arange(mesh.num_triangles)
        div = self.basis_div(panels)
        rows = np.repeat(panels, 3)
        cols = self.scatter_edges.ravel()
        return sparse.csr_matrix(
            (div.ravel(), (rows, cols)), shape=(mesh.num_triangles, self.num_basis)
        )


def _subdivide_rule(bary, w):
    """One uniform 4-way split of a barycentric rule."""
    corners = [
        ((1, 0, 0), (0.5, 0.5, 0), (0.5, 0, 0.5)),
        ((0.5, 0.5, 0), (0, 1, 0), (0, 0.5, 0.5)),
        ((0.5, 0, 0.5), (0, 0.5, 0.5), (0, 0, 1)),
        ((0.5, 0.5, 0), (0, 0.5, 0.5), (0.5, 0, 0.5)),
    ]
    out_b, out_w = [], []
    for cs in corners:
        cs = np.array(cs)
        out_b.append(bary @ cs)
        out_w.append(w / 4.0)
    return np.vstack(out_b), np.hstack(out_w)


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _chunks(n, size):
    for lo in range(0, n, size):
        yield slice(lo, min(lo + size, n))


def _scatter(out, rows3, cols3, block):
    np.add.at(out, (rows3[:, :, None], cols3[:, None, :]), block)


def _pair_r(pt, ps):
    return np.linalg.norm(pt[:, :, None, :] - ps[:, None, :, :], axis=3)


def _contract_dot(kv, ft, fs):
    return np.einsum("akqd,alpd,aqp->akl", ft, fs, kv, optimize=True)


def _contract_cross(kv, ft, fs, pt, ps):
    """f_m(r) . ((r - r') x f_n(r')) against weighted kernel values kv."""
    m = kv.shape[0]
    out = np.empty((m, 3, 3))
    u = pt[:, :, None, :] - ps[:, None, :, :]
    for l in range(3):
        crs = np.cross(u, fs[:, l][:, None, :, :])
        out[:, :, l] = np.einsum("akqd,aqpd,aqp->ak", ft, crs, kv, optimize=True)
    return out


# -- regularizing transforms for touching panel pairs ---------------------------
#
# Simplex coordinates (r1, r2) with 0 <= r2 <= r1 <= 1 map to the panel via
# X(r1, r2) = (1 - r1) v1 + (r1 - r2) v2 + r2 v3; the physical surface
# integral carries a factor 2 * area per panel.  The shared vertices must
# come first in both vertex lists (both of them, in the same order, for the
# common-edge case).

_SS_CACHE = {}


def _ss_rule(case, g):
    """(x_simplex, y_simplex, weights) for one touching case.

    sum_i w_i f(X(x_i), Y(y_i)) * (4 A_x A_y) approximates the pair integral.
    """
    key = (case, g)
    if key in _SS_CACHE:
        return _SS_CACHE[key]
    x1, w1 = _gauss01(g)
    xi, e1, e2, e3 = np.meshgrid(x1, x1, x1, x1, indexing="ij")
    wxi, we1, we2, we3 = np.meshgrid(w1, w1, w1, w1, indexing="ij")
    base_w = (wxi * we1 * we2 * we3).ravel()
    xi, e1, e2, e3 = (a.ravel() for a in (xi, e1, e2, e3))

    xs, ys, ws = [], [], []

    def add(xc, yc, jac):
        xs.append(np.stack(xc, axis=1))
        ys.append(np.stack(yc, axis=1))
        ws.append(base_w * jac)

    if case == "coincide":
        jac = xi**3 * e1**2 * e2
        add((xi, xi * (1 - e1 + e1 * e2)), (xi * (1 - e1 * e2 * e3), xi * (1 - e1)), jac)
        add((xi * (1 - e1 * e2 * e3), xi * (1 - e1)), (xi, xi * (1 - e1 + e1 * e2)), jac)
        add((xi, xi * e1 * (1 - e2 + e2 * e3)), (xi * (1 - e1 * e2), xi * e1 * (1 - e2)), jac)
        add((xi * (1 - e1 * e2), xi * e1 * (1 - e2)), (xi, xi * e1 * (1 - e2 + e2 * e3)), jac)
        add((xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)), (xi, xi * e1 * (1 - e2)), jac)
        add((xi, xi * e1 * (1 - e2)), (xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)), jac)
    elif case == "edge":
        add((xi, xi * e1 * e3), (xi * (1 - e1 * e2), xi * e1 * (1 - e2)),
            xi**3 * e1**2)
        add((xi, xi * e1), (xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3)),
            xi**3 * e1**2 * e2)
        add((xi * (1 - e1 * e2), xi * e1 * (1 - e2)), (xi, xi * e1 * e2 * e3),
            xi**3 * e1**2 * e2)
        add((xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3)), (xi, xi * e1),
            xi**3 * e1**2 * e2)
        add((xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)), (xi, xi * e1 * e2),
            xi**3 * e1**2 * e2)
    elif case == "vertex":
        add((xi, xi * e1), (xi * e2, xi * e2 * e3), xi**3 * e2)
        add((xi * e2, xi * e2 * e3), (xi, xi * e1), xi**3 * e2)
    else:
        raise ValueError(f"unknown touching case {case!r}")

    rule = (np.vstack(xs), np.vstack(ys), np.hstack(ws))
    _SS_CACHE[key] = rule
    return rule


def _simplex_points(verts, simplex):
    """Map simplex coordinates onto triangles given as (m, 3, 3) vertices."""
    r1 = simplex[:, 0]
    r2 = simplex[:, 1]
    return (
        (1.0 - r1)[None, :, None] * verts[:, None, 0, :]
        + (r1 - r2)[None, :, None] * verts[:, None, 1, :]
        + r2[None, :, None] * verts[:, None, 2, :]
    )


def _touch_case(tri_t, tri_s, same_panel):
    """Classify a touching pair and order vertices with shared ones first."""
    if same_panel:
        return "coincide", list(tri_t), list(tri_t)
    shared = [v for v in tri_t if v in tri_s]
    if len(shared) == 2:
        ot = [v for v in tri_t if v not in shared][0]
        os_ = [v for v in tri_s if v not in shared][0]
        return "edge", shared + [ot], shared + [os_]
    if len(shared) == 1:
        ot = [v for v in tri_t if v != shared[0]]
        os_ = [v for v in tri_s if v != shared[0]]
        return "vertex", shared + ot, shared + os_
    raise ValueError("pair does not touch")


class _PolarRule:
    """Inner rule splitting the source triangle at the projection of each
    observation point, with the radial variable taken as the distance R so
    that 1/R panel singularities are removed and the radial integration can
    be segmented exactly at given sphere radii around the observation point.
    """

    def __init__(self, src_tris, obs, order, breaks=None):
        x1, w1 = _gauss01(order)
        v = src_tris  # (m, 3, 3)
        n_vec = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        n_vec /= np.linalg.norm(n_vec, axis=1, keepdims=True)
        h = np.einsum("aqd,ad->aq", obs - v[:, None, 0, :], n_vec)
        rho = obs - h[:, :, None] * n_vec[:, None, :]

        a = v[:, None, [0, 1, 2], :] - rho[:, :, None, :]  # (m, nq, 3, 3)
        b = v[:, None, [1, 2, 0], :] - rho[:, :, None, :]
        tiny = 1e-300

        alen = np.linalg.norm(a, axis=3)
        x_hat = a / np.maximum(alen, tiny)[..., None]
        y_hat = np.cross(np.broadcast_to(n_vec[:, None, None, :], x_hat.shape), x_hat)
        theta_b = np.arctan2(
            np.einsum("aqkd,aqkd->aqk", b, y_hat),
            np.einsum("aqkd,aqkd->aqk", b, x_hat),
        )
        degenerate = (alen < 1e-14) | (np.linalg.norm(b, axis=3) < 1e-14)
        theta_b = np.where(degenerate, 0.0, theta_b)  # signed angular sweep

        theta = theta_b[..., None] * x1               # (m, nq, 3, nth)
        d_ray = (
            x_hat[..., None, :] * np.cos(theta)[..., None]
            + y_hat[..., None, :] * np.sin(theta)[..., None]
        )
        t_hat = b - a
        t_hat = t_hat / np.maximum(np.linalg.norm(t_hat, axis=3), tiny)[..., None]
        m_hat = np.cross(np.broadcast_to(n_vec[:, None, None, :], t_hat.shape), t_hat)
        c_dist = np.einsum("aqkd,aqkd->aqk", a, m_hat)
        denom = np.einsum("aqkjd,aqkd->aqkj", d_ray, m_hat)
        l_ray = c_dist[..., None] / np.where(np.abs(denom) < tiny, tiny, denom)
        l_ray = np.maximum(l_ray, 0.0)

        habs = np.abs(h)[:, :, None, None]
        r_lo = np.broadcast_to(habs, l_ray.shape)
        r_hi = np.sqrt(habs**2 + l_ray**2)

        if breaks:
            cuts = [r_lo]
            for rb in sorted(breaks):
                cuts.append(np.clip(np.full_like(r_lo, rb), r_lo, r_hi))
            cuts.append(r_hi)
            bnd = np.stack(cuts, axis=-1)
            lo, hi = bnd[..., :-1], bnd[..., 1:]
        else:
            lo, hi = r_lo[..., None], r_hi[..., None]
        rad = lo[..., None] + (hi - lo)[..., None] * x1   # (.., nseg, nR)
        rw = (hi - lo)[..., None] * w1

        r_in = np.sqrt(np.maximum(rad**2 - habs[..., None, None] ** 2, 0.0))
        pts = rho[:, :, None, None, None, None, :] + r_in[..., None] * d_ray[
            :, :, :, :, None, None, :
        ]
        wts = (theta_b[..., None] * w1)[..., None, None] * rad * rw
        m, nq = pts.shape[:2]
        self.points = pts.reshape(m, nq, -1, 3)
        self.weights = wts.reshape(m, nq, -1)
        self.radii = rad.reshape(m, nq, -1)


def _polar_blocks(kernel, kind, rule, ft, tw, fs_in, obs):
    """Contract one kernel over a prepared polar rule."""
    if kind == "divdiv":
        kv = kernel.values(rule.radii) * rule.weights
        return np.einsum("aq,aqj->a", tw, kv)  # face value; divs applied later
    g = kernel.values(rule.radii) * rule.weights * tw[:, :, None]
    if kind == "dot":
        return np.einsum("akqd,alqjd,aqj->akl", ft, fs_in, g, optimize=True)
    m = g.shape[0]
    out = np.empty((m, 3, 3))
    u = obs[:, :, None, :] - rule.points
    for l in range(3):
        crs = np.cross(u, fs_in[:, l])
        out[:, :, l] = np.einsum("akqd,aqjd,aqj->ak", ft, crs, g, optimize=True)
    return out


def _touch_blocks(kernels, kind, test_ps, src_ps, ti, si, case, perm_t, perm_s, g):
    """Sauter-Schwab contraction for one group of touching pairs.

    perm_t/perm_s: (m, 3) vertex ids ordered with shared vertices first.
    Returns a list (one per kernel) of (m,) face values or (m, 3, 3) blocks.
    """
    sx, sy, w = _ss_rule(case, g)
    vt = test_ps.mesh.vertices[perm_t]
    vs = src_ps.mesh.vertices[perm_s]
    xpts = _simplex_points(vt, sx)     # (m, n, 3)
    ypts = _simplex_points(vs, sy)
    r = np.linalg.norm(xpts - ypts, axis=2)
    at = test_ps.mesh.areas()[ti]
    asrc = src_ps.mesh.areas()[si]
    scale = 4.0 * at * asrc

    if kind == "divdiv":
        return [np.einsum("an,n->a", kernel.values(r), w) * scale
                for kernel in kernels]

    ft = test_ps.basis_at(ti, xpts)    # (m, 3, n, 3)
    fs = src_ps.basis_at(si, ypts)
    out = []
    if kind == "dot":
        for kernel in kernels:
            kv = kernel.values(r) * w
            out.append(np.einsum("aknd,alnd,an->akl", ft, fs, kv, optimize=True)
                       * scale[:, None, None])
        return out
    u = xpts - ypts
    crs = np.stack([np.cross(u, fs[:, l]) for l in range(3)], axis=1)
    for kernel in kernels:
        kv = kernel.values(r) * w
        out.append(np.einsum("aknd,alnd,an->akl", ft, crs, kv, optimize=True)
                   * scale[:, None, None])
    return out


def assemble(test_ps, src_ps, kernel_list, kind, config=None):
    """Assemble one dense matrix per kernel; see the module docstring.

    kernel_list may be a single kernel or a sequence; the return matches.
    """
    cfg = config if config is not None else QuadratureConfig()
    single = not isinstance(kernel_list, (list, tuple))
    kernels = [kernel_list] if single else list(kernel_list)
    if kind not in ("dot", "divdiv", "cross"):
        raise ValueError(f"unknown interaction kind {kind!r}")

    nt, ns = test_ps.mesh.num_triangles, src_ps.mesh.num_triangles
    same_surface = test_ps.mesh.vertices is src_ps.mesh.vertices

    dist = np.linalg.norm(
        test_ps.centroids[:, None, :] - src_ps.centroids[None, :, :], axis=2
    )
    near = dist < cfg.near_factor * (test_ps.radii[:, None] + src_ps.radii[None, :])
    ti_near, si_near = np.nonzero(near)
    ti_far, si_far = np.nonzero(~near)

    # split near pairs into touching (shared vertices) and merely close
    if same_surface and len(ti_near):
        tt = test_ps.mesh.triangles[ti_near]
        ts = src_ps.mesh.triangles[si_near]
        shared_count = (tt[:, :, None] == ts[:, None, :]).sum(axis=(1, 2))
        if test_ps.mesh is src_ps.mesh:
            shared_count[ti_near == si_near] = 3
        touching = shared_count > 0
    else:
        touching = np.zeros(len(ti_near), dtype=bool)
    ti_touch, si_touch = ti_near[touching], si_near[touching]
    ti_close, si_close = ti_near[~touching], si_near[~touching]

    if kind == "divdiv":
        face_q = [np.zeros((nt, ns)) for _ in kernels]
        outs = None
    else:
        outs = [np.zeros((test_ps.num_basis, src_ps.num_basis)) for _ in kernels]
        face_q = None
    rows_all = test_ps.scatter_edges
    cols_all = src_ps.scatter_edges

    def deposit(ik, ti, si, block):
        if kind == "divdiv":
            np.add.at(face_q[ik], (ti, si), block)
        else:
            _scatter(outs[ik], rows_all[ti], cols_all[si], block)

    if cfg.radial_split:
        vt_all = test_ps.mesh.triangle_points()
        vs_all = src_ps.mesh.triangle_points()
    deferred = [[] for _ in kernels]  # breakpoint-straddling pairs, per kernel

    # -- far and close pairs: tensorized Gauss ------------------------------------
    for pairs, geo_key in (((ti_far, si_far), "far"), ((ti_close, si_close), "near")):
        if geo_key == "far":
            geo_t = test_ps.geometry(cfg.far_order)
            geo_s = src_ps.geometry(cfg.far_order)
        else:
            geo_t = test_ps.geometry(cfg.near_order, cfg.near_levels)
            geo_s = src_ps.geometry(cfg.near_order, cfg.near_levels)
        chunk = cfg.chunk if geo_key == "far" else cfg.near_chunk
        npt = geo_t["points"].shape[1] * geo_s["points"].shape[1]
        chunk = max(1, min(chunk, int(3e7 / max(npt, 1))))
        for sl in _chunks(len(pairs[0]), chunk):
            ti, si = pairs[0][sl], pairs[1][sl]
            pt, ps = geo_t["points"][ti], geo_s["points"][si]
            r = _pair_r(pt, ps)
            w = geo_t["weights"][ti][:, :, None] * geo_s["weights"][si][:, None, :]
            ft, fs = geo_t["fvals"][ti], geo_s["fvals"][si]

            if cfg.radial_split:
                dv = np.linalg.norm(
                    vt_all[ti][:, :, None, :] - vs_all[si][:, None, :, :], axis=3
                )
                r_lo = np.maximum(
                    dv.min(axis=(1, 2)) - test_ps.radii[ti] - src_ps.radii[si], 0.0
                )
                r_hi = dv.max(axis=(1, 2))

            for ik, kernel in enumerate(kernels):
                keep = np.ones(len(ti), dtype=bool)
                if cfg.radial_split:
                    for rb in kernel.breakpoints():
                        keep &= ~((r_lo < rb) & (rb < r_hi))
                    if not keep.all():
                        deferred[ik].append((ti[~keep], si[~keep]))
                kv = kernel.values(r[keep]) * w[keep]
                if kind == "divdiv":
                    np.add.at(face_q[ik], (ti[keep], si[keep]), kv.sum(axis=(1, 2)))
                elif kind == "dot":
                    _scatter(outs[ik], rows_all[ti[keep]], cols_all[si[keep]],
                             _contract_dot(kv, ft[keep], fs[keep]))
                else:
                    _scatter(outs[ik], rows_all[ti[keep]], cols_all[si[keep]],
                             _contract_cross(kv, ft[keep], fs[keep],
                                             pt[keep], ps[keep]))

    # -- touching pairs: regularizing transforms -----------------------------------
    if len(ti_touch):
        tri_t_ids = test_ps.mesh.triangles
        tri_s_ids = src_ps.mesh.triangles
        groups = {"coincide": [], "edge": [], "vertex": []}
        for t, s in zip(ti_touch, si_touch):
            same_panel = test_ps.mesh is src_ps.mesh and t == s
            case, pt_ids, ps_ids = _touch_case(
                list(tri_t_ids[t]), list(tri_s_ids[s]), same_panel
            )
            groups[case].append((t, s, pt_ids, ps_ids))
        for case, items in groups.items():
            if not items:
                continue
            ti = np.array([it[0] for it in items])
            si = np.array([it[1] for it in items])
            perm_t = np.array([it[2] for it in items])
            perm_s = np.array([it[3] for it in items])
            npts = len(_ss_rule(case, cfg.ss_order)[2])
            chunk = max(1, min(cfg.near_chunk, int(3e7 / npts)))
            for sl in _chunks(len(ti), chunk):
                blocks = _touch_blocks(
                    kernels, kind, test_ps, src_ps, ti[sl], si[sl], case,
                    perm_t[sl], perm_s[sl], cfg.ss_order,
                )
                for ik, block in enumerate(blocks):
                    deposit(ik, ti[sl], si[sl], block)

    # -- breakpoint-straddling pairs (radial splitting) ----------------------------
    ngt = test_ps.geometry(cfg.near_order)
    for ik, kernel in enumerate(kernels):
        for ti, si in deferred[ik]:
            for sl in _chunks(len(ti), cfg.near_chunk):
                tt, ss = ti[sl], si[sl]
                pt = ngt["points"][tt]
                tw = ngt["weights"][tt]
                ft = ngt["fvals"][tt]
                rule = _PolarRule(src_ps.mesh.triangle_points(ss), pt,
                                  cfg.polar_order, breaks=kernel.breakpoints())
                fs_in = None if kind == "divdiv" else src_ps.basis_at(
                    ss, rule.points)
                deposit(ik, tt, ss,
                        _polar_blocks(kernel, kind, rule, ft, tw, fs_in, pt))

    if kind == "divdiv":
        dmat_t = test_ps.charge_incidence()
        dmat_s = src_ps.charge_incidence()
        outs = [np.asarray(dmat_t.T @ q @ dmat_s) for q in face_q]

    return outs[0] if single else outs
