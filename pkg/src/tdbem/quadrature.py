"""Symmetric triangle quadrature rules and analytic singular integrals."""

from __future__ import annotations

import numpy as np

# Dunavant symmetric rules on the reference triangle, weights normalized to 1.
# Each entry: list of (generator kind, data, weight). Generators:
#   "c"  - centroid (1 point)
#   "v3" - (a, a, 1-2a) permutations (3 points)
#   "v6" - (a, b, 1-a-b) permutations (6 points)


def _expand(gens):
    pts, wts = [], []
    for kind, data, w in gens:
        if kind == "c":
            pts.append((1 / 3, 1 / 3, 1 / 3))
            wts.append(w)
        elif kind == "v3":
            a = data
            c = 1 - 2 * a
            for bc in ((a, a, c), (a, c, a), (c, a, a)):
                pts.append(bc)
                wts.append(w)
        else:
            a, b = data
            c = 1 - a - b
            for bc in ((a, b, c), (b, a, c), (a, c, b), (c, a, b), (b, c, a), (c, b, a)):
                pts.append(bc)
                wts.append(w)
    return np.array(pts), np.array(wts)


_RULES = {
    1: [("c", None, 1.0)],
    2: [("v3", 1 / 6, 1 / 3)],
    3: [("c", None, -0.5625), ("v3", 0.2, 0.5208333333333333)],
    4: [
        ("v3", 0.445948490915965, 0.223381589678011),
        ("v3", 0.091576213509771, 0.109951743655322),
    ],
    5: [
        ("c", None, 0.225),
        ("v3", 0.470142064105115, 0.132394152788506),
        ("v3", 0.101286507323456, 0.125939180544827),
    ],
    6: [
        ("v3", 0.249286745170910, 0.116786275726379),
        ("v3", 0.063089014491502, 0.050844906370207),
        ("v6", (0.310352451033785, 0.053145049844816), 0.082851075618374),
    ],
    7: [
        ("c", None, -0.149570044467670),
        ("v3", 0.260345966079038, 0.175615257433204),
        ("v3", 0.065130102902216, 0.053347235608839),
        ("v6", (0.312865496004875, 0.048690315425316), 0.077113760890257),
    ],
    8: [
        ("c", None, 0.14431560767778348),
        ("v3", 0.4592925882927167, 0.09509163426728927),
        ("v3", 0.17056930775174967, 0.10321737053472303),
        ("v3", 0.05054722831703088, 0.03245849762319904),
        ("v6", (0.26311282963466925, 0.00839477740994316), 0.02723031417443044),
    ],
    9: [
        ("c", None, 0.097135796282799),
        ("v3", 0.489682519198738, 0.031334700227139),
        ("v3", 0.437089591492937, 0.077827541004774),
        ("v3", 0.188203535619033, 0.079647738927210),
        ("v3", 0.044729513394453, 0.025577675658698),
        ("v6", (0.741198598784498, 0.036838412054736), 0.043283539377289),
    ],
    10: [
        ("c", None, 0.090817990382754),
        ("v3", 0.485577633383657, 0.036725957756467),
        ("v3", 0.109481575485037, 0.045321059435528),
        ("v6", (0.307939838764121, 0.141707219414880), 0.072757916845420),
        ("v6", (0.246672560639903, 0.025003534762686), 0.028327242531057),
        ("v6", (0.066803251012200, 0.009540815400299), 0.009421666963733),
    ],
}

_CACHE = {}


def triangle_rule(order):
    """Barycentric points and weights; exact for total degree <= order.

    Weights sum to 1 (reference-triangle normalization); multiply by the
    physical triangle area when integrating.
    """
    if order < 1:
        order = 1
    order = min(int(order), 10)
    if order not in _CACHE:
        _CACHE[order] = _expand(_RULES[order])
    return _CACHE[order]


def physical_points(tri_pts, bary):
    """Map barycentric coordinates onto triangles.

    tri_pts: (..., 3, 3) triangle vertices; bary: (nq, 3).
    Returns (..., nq, 3).
    """
    return np.einsum("qk,...kd->...qd", bary, tri_pts)


# -- analytic potentials of a triangle ------------------------------------------
#
# Closed-form integrals of 1/R and (r' - rho)/R over a planar triangle, used
# for singularity extraction on touching panel pairs (Wilton et al. 1984
# style edge decomposition).


def triangle_potential_batch(tris, obs):
    """Analytic triangle potentials for a batch of (triangle, points) pairs.

    tris: (..., 3, 3) vertices; obs: (..., n, 3) observation points, with
    matching leading dimensions.  Returns (I0, I1, rho) where
    I0 = int 1/R ds' with shape (..., n), I1 = int (r'-rho)/R ds' with shape
    (..., n, 3), and rho is the projection of each observation point onto
    the triangle plane.
    """
    tris = np.asarray(tris, dtype=float)
    obs = np.asarray(obs, dtype=float)
    n_vec = np.cross(tris[..., 1, :] - tris[..., 0, :], tris[..., 2, :] - tris[..., 0, :])
    n_vec = n_vec / np.linalg.norm(n_vec, axis=-1, keepdims=True)
    w = np.einsum("...nd,...d->...n", obs - tris[..., None, 0, :], n_vec)
    rho = obs - w[..., None] * n_vec[..., None, :]

    i0 = np.zeros(obs.shape[:-1])
    i1 = np.zeros(obs.shape)
    beta_sum = np.zeros(obs.shape[:-1])
    tiny = 1e-300
    for k in range(3):
        v0 = tris[..., k, :]
        v1 = tris[..., (k + 1) % 3, :]
        s = v1 - v0
        s_hat = s / np.linalg.norm(s, axis=-1, keepdims=True)
        m_hat = np.cross(s_hat, n_vec)  # outward in-plane edge normal

        t = np.einsum("...nd,...d->...n", v0[..., None, :] - rho, m_hat)
        l_lo = np.einsum("...nd,...d->...n", v0[..., None, :] - rho, s_hat)
        l_hi = np.einsum("...nd,...d->...n", v1[..., None, :] - rho, s_hat)
        r_lo = np.linalg.norm(v0[..., None, :] - obs, axis=-1)
        r_hi = np.linalg.norm(v1[..., None, :] - obs, axis=-1)
        r0_sq = t * t + (w * w)

        # log term; guard the on-edge-line degenerate case R+l -> 0
        log_term = np.log(np.maximum(r_hi + l_hi, tiny)) - np.log(
            np.maximum(r_lo + l_lo, tiny)
        )
        on_line = r0_sq < 1e-28 * np.maximum(r_lo, r_hi) ** 2
        log_term = np.where(on_line & (np.abs(t) < 1e-14), 0.0, log_term)

        i0 += t * log_term
        beta_sum += np.arctan2(t * l_hi, r0_sq + np.abs(w) * r_hi) - np.arctan2(
            t * l_lo, r0_sq + np.abs(w) * r_lo
        )
        edge_int = 0.5 * (l_hi * r_hi - l_lo * r_lo + r0_sq * log_term)
        i1 += m_hat[..., None, :] * edge_int[..., None]

    i0 -= np.abs(w) * beta_sum
    return i0, i1, rho


def triangle_potential(tri, obs):
    """Return (I0, I1) for a single triangle; see triangle_potential_batch."""
    i0, i1, _ = triangle_potential_batch(np.asarray(tri), np.atleast_2d(obs))
    return i0, i1
