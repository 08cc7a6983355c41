import numpy as np
import pytest

from tdbem.assembly import PanelSet, QuadratureConfig, assemble
from tdbem.assembly_td import (
    DELAY_CAP, DelaySequence, assemble_hq, assemble_mot_efie,
    assemble_mot_mfie, assemble_stabilized_sequences, delay_horizon,
)
from tdbem.basis import assemble_gram_mixed, build_bc, build_rwg
from tdbem.kernels import StaticScalar
from tdbem.mesh import barycentric_refinement
from tdbem.qhz import QhzProjectors

CFG = QuadratureConfig(ss_order=6)


@pytest.fixture(scope="module")
def tet_rwg(tetrahedron):
    return build_rwg(tetrahedron)


@pytest.fixture(scope="module")
def tet_bc(tetrahedron):
    refined, maps = barycentric_refinement(tetrahedron)
    return build_bc(tetrahedron, refined, maps)


def test_delay_sequence_protocol():
    m0, m1 = np.eye(2), 2 * np.eye(2)
    tail = 3 * np.eye(2)
    seq = DelaySequence([m0, m1], tail=tail, dt=0.1)
    assert seq.horizon == 2
    assert np.array_equal(seq.term(-1), np.zeros((2, 2)))
    assert np.array_equal(seq.term(1), m1)
    assert np.array_equal(seq.term(10), tail)
    no_tail = DelaySequence([m0, np.zeros((2, 2))], dt=0.1)
    assert no_tail.horizon == 1  # trailing zeros trimmed
    assert np.array_equal(no_tail.term(5), np.zeros((2, 2)))


def test_delay_horizon_cap():
    assert delay_horizon(1.0, 0.5, 1.0, 2) == 4
    with pytest.raises(ValueError):
        delay_horizon(1e6, 1e-9, 1.0, 2)


def test_large_step_collapse(tetrahedron, tet_rwg):
    """c dt above the diameter turns the retarded kernels into closed forms:
    the interaction matrices become scaled static matrices."""
    c, eta = 1.0, 1.0
    dt = 2.5 * tetrahedron.diameter()
    ps = PanelSet(tetrahedron, tet_rwg)
    a_dot = assemble(ps, ps, StaticScalar(1.0), "dot", CFG)
    a_div = assemble(ps, ps, StaticScalar(1.0), "divdiv", CFG)
    zs_seq, zh_seq = assemble_mot_efie(tetrahedron, dt, c, eta, config=CFG,
                                       rwg=tet_rwg)
    scale = np.abs(a_dot).max() * eta / (c * dt)
    assert np.abs(zs_seq.term(0) + (eta / (c * dt)) * a_dot).max() < 1e-10 * scale
    assert np.abs(zs_seq.term(1) - (eta / (c * dt)) * a_dot).max() < 1e-10 * scale
    assert np.abs(zs_seq.term(2)).max() < 1e-12 * scale
    # hypersingular tail is the saturated running integral
    assert zh_seq.tail is not None
    assert np.abs(zh_seq.tail + c * eta * dt * a_div).max() < 1e-10 * np.abs(
        c * eta * dt * a_div).max()
    assert np.abs(zh_seq.term(7) - zh_seq.tail).max() == 0.0


def test_temporal_partition_identities(tetrahedron, tet_rwg):
    """Sum rules inherited from the interpolators: the derivative samples
    sum to zero and the quadratic samples sum to one, at any step size."""
    c, eta = 1.0, 1.0
    dt = 0.3 * tetrahedron.diameter()
    ps = PanelSet(tetrahedron, tet_rwg)
    a_dot = assemble(ps, ps, StaticScalar(-eta / c), "dot", CFG)
    a_div = assemble(ps, ps, StaticScalar(-c * eta), "divdiv", CFG)
    zs_seq, _ = assemble_mot_efie(tetrahedron, dt, c, eta, config=CFG,
                                  rwg=tet_rwg)
    total = sum(zs_seq.term(d) for d in range(zs_seq.horizon))
    assert np.abs(total).max() < 1e-10 * np.abs(a_dot).max() / dt
    hq = assemble_hq(tetrahedron, dt, c, eta, config=CFG, rwg=tet_rwg)
    total_q = sum(hq.term(d) for d in range(hq.horizon))
    assert np.abs(total_q - a_div).max() < 1e-10 * np.abs(a_div).max()


def test_mfie_large_step_is_static(tetrahedron, tet_rwg, tet_bc):
    from tdbem.assembly_fd import assemble_static_mfie
    dt = 2.5 * tetrahedron.diameter()
    m_seq = assemble_mot_mfie(tet_bc, tet_rwg, dt, 1.0, config=CFG)
    m0 = assemble_static_mfie(tet_bc, tet_rwg, config=CFG)
    assert np.abs(m_seq.term(0) - m0).max() < 1e-10 * np.abs(m0).max()
    assert m_seq.horizon == 1 or np.abs(m_seq.term(1)).max() < 1e-12 * np.abs(m0).max()


def test_causality(coarse_sphere):
    """No interaction before the light cone reaches a pair."""
    mesh = coarse_sphere
    c = 1.0
    dt = 0.08 * mesh.diameter()
    rwg = build_rwg(mesh)
    zs_seq, _ = assemble_mot_efie(mesh, dt, c, 1.0, config=CFG, rwg=rwg)
    # support of each function: the vertices of its two triangles
    def support(m):
        tris = mesh.edge_tris[m]
        return mesh.vertices[np.unique(mesh.triangles[tris])]
    centers = 0.5 * mesh.vertices[mesh.edges].sum(axis=1)
    d2 = np.sum((centers[:, None] - centers[None]) ** 2, axis=2)
    m, n = np.unravel_index(np.argmax(d2), d2.shape)
    sm, sn = support(m), support(n)
    gap = np.linalg.norm(sm[:, None] - sn[None], axis=2).min()
    d_min = int(gap / (c * dt)) - 1  # hat support reaches one step ahead
    assert d_min > 2
    for d in range(d_min):
        assert zs_seq.term(d)[m, n] == 0.0
    # and the entry does switch on afterwards
    assert any(zs_seq.term(d)[m, n] != 0.0
               for d in range(d_min, zs_seq.horizon))


def test_stabilized_sequences_structure(tetrahedron, tet_rwg, tet_bc):
    c, eta = 1.0, 1.0
    dt = 0.4 * tetrahedron.diameter()
    t0_scale = tetrahedron.diameter() / c
    dt_tilde = dt / t0_scale
    p = QhzProjectors(tetrahedron)
    gram = assemble_gram_mixed(tet_bc, tet_rwg).matrix
    zs_seq, _ = assemble_mot_efie(tetrahedron, dt, c, eta, config=CFG,
                                  rwg=tet_rwg)
    hq_seq = assemble_hq(tetrahedron, dt, c, eta, config=CFG, rwg=tet_rwg)
    m_seq = assemble_mot_mfie(tet_bc, tet_rwg, dt, c, config=CFG)
    zt, xt = assemble_stabilized_sequences(zs_seq, hq_seq, m_seq, gram, p,
                                           dt_tilde, t0_scale)
    assert zt.tail is None and xt.tail is None
    # the stabilized sequences sum to finite static limits: the smooth part
    # telescopes and the quadratic partition reproduces the static kernel
    z_total = sum(zt.term(d) for d in range(zt.horizon))
    ps = PanelSet(tetrahedron, tet_rwg)
    a_div = assemble(ps, ps, StaticScalar(-c * eta), "divdiv", CFG)
    want = t0_scale * p.project_sigma((p.project_sigma(a_div.T)).T)
    assert np.abs(z_total - want).max() < 1e-9 * max(np.abs(want).max(), 1.0)
    # X sums to P_lh-projected static magnetic operator (the differenced
    # irrotational path telescopes away)
    x_total = sum(xt.term(d) for d in range(xt.horizon))
    m0 = m_seq.term(0)
    static_x = sum(m_seq.term(d) for d in range(m_seq.horizon)) + 0.5 * gram
    want_x = (p.project_lambda_h(static_x.T)).T
    assert np.abs(x_total - want_x).max() < 1e-9 * np.abs(want_x).max()
