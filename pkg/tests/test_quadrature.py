import numpy as np
import pytest

from tdbem.quadrature import (
    physical_points, triangle_potential, triangle_potential_batch, triangle_rule,
)

import oracles


def _monomial_exact(p, q):
    """int_T u^p v^q over the unit triangle."""
    from math import factorial
    return factorial(p) * factorial(q) / factorial(p + q + 2)


@pytest.mark.parametrize("order", range(1, 11))
def test_rules_integrate_monomials(order):
    # weights are normalized to sum to 1; the integral over the reference
    # triangle of area 1/2 is 0.5 * sum(w f)
    bary, w = triangle_rule(order)
    u = bary[:, 1]
    v = bary[:, 2]
    assert w.sum() == pytest.approx(1.0, abs=1e-13)
    for p in range(order + 1):
        for q in range(order + 1 - p):
            val = 0.5 * np.dot(w, u**p * v**q)
            assert val == pytest.approx(_monomial_exact(p, q), rel=2e-12), (p, q)


def test_rule_barycentric_consistency():
    for order in range(1, 11):
        bary, _ = triangle_rule(order)
        assert np.allclose(bary.sum(axis=1), 1.0)


def test_order_clamping():
    lo, _ = triangle_rule(0)
    assert np.array_equal(lo, triangle_rule(1)[0])
    hi, _ = triangle_rule(99)
    assert np.array_equal(hi, triangle_rule(10)[0])


def test_physical_points_affine():
    tri = np.array([[0.0, 0, 0], [2, 0, 0], [0, 3, 1]])
    bary, _ = triangle_rule(3)
    pts = physical_points(tri[None], bary)
    expect = bary @ tri
    assert np.allclose(pts[0], expect)


def test_triangle_potential_far_matches_quadrature():
    tri = np.array([[0.0, 0, 0], [1, 0.1, 0], [0.2, 0.8, 0.3]])
    obs = np.array([2.0, -1.0, 1.5])
    bary, w = triangle_rule(10)
    pts = physical_points(tri[None], bary)[0]
    area = oracles.tri_area(tri)
    r = np.linalg.norm(pts - obs, axis=1)
    num0 = area * np.dot(w, 1.0 / r)
    i0, i1 = triangle_potential(tri, obs)
    assert i0[0] == pytest.approx(num0, rel=1e-10)
    # I1 = int (y - rho)/R with rho the in-plane projection of obs
    n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    n = n / np.linalg.norm(n)
    rho = obs - np.dot(obs - tri[0], n) * n
    num1 = area * np.einsum("q,qd->d", w, (pts - rho) / r[:, None])
    assert np.allclose(i1[0], num1, rtol=1e-9)


def test_triangle_potential_singular_matches_oracle():
    """Closed-form 1/R panel integrals against the independent closed forms."""
    tri = np.array([[0.0, 0, 0], [1.1, 0.1, 0], [0.3, 0.9, 0]])
    pot = oracles.PanelPotentials(tri)
    obs = np.array([
        [0.4, 0.3, 0.0],     # interior of the panel
        [0.55, 0.05, 0.02],  # near an edge
        [1.3, -0.2, 0.0],    # in plane, outside
        [0.4, 0.3, -0.7],    # below
    ])
    i0, i1, _ = triangle_potential_batch(tri, obs)
    assert np.allclose(i0, pot.i0(obs), rtol=1e-12)
    assert np.allclose(i1, pot.vmom(obs), rtol=1e-12, atol=1e-13)
