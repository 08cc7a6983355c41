"""Retarded-potential interaction matrix sequences for marching in time.

All sequences are indexed by the delay d = (test step) - (trial shift); the
space-time system is block lower triangular Toeplitz, so one sequence per
operator suffices.  Entry formulas (rotated testing already folded in):

    S[b](d)   = -(eta/c) int int f_m . f_n'  b'(d dt - R/c) / (4 pi R)
    Hi[b](d)  = -c eta   int int div f_m div f_n' B(d dt - R/c) / (4 pi R),
                B the running integral of b (constant tail once saturated)
    Hq(d)     = -c eta   int int div f_m div f_n' q(d dt - R/c) / (4 pi R)
    M[b](d)   = + int int g_m . ((r-r') x f_n')
                  [ b(tau)/R^3 + b'(tau)/(c R^2) ] / (4 pi),  tau = d dt - R/c

with b the hat (or quadratic) interpolator.  The stabilized sequences
combine these with the quasi-Helmholtz projectors; their irrotational path
uses the scaled derivative exactly, q' = (h_i - h_{i+1})/dt, so no running
integral and no constant tail remains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import PanelSet, QuadratureConfig, assemble
from .basis import build_rwg
from .kernels import (
    HatProfile, HatDerivProfile, HatIntegralProfile,
    QuadProfile, QuadDerivProfile,
    RetardedScalar, RetardedCrossWeight, StaticScalar,
)

DELAY_CAP = 4096


@dataclass
class DelaySequence:
    """Finite matrix sequence with an optional constant tail."""

    matrices: list
    tail: np.ndarray = None
    dt: float = 0.0
    label: str = ""

    def __post_init__(self):
        while len(self.matrices) > 1 and not np.any(self.matrices[-1]):
            if self.tail is not None and np.any(self.tail):
                break
            self.matrices.pop()

    @property
    def horizon(self):
        return len(self.matrices)

    def term(self, d):
        if d < 0:
            return np.zeros_like(self.matrices[0])
        if d < len(self.matrices):
            return self.matrices[d]
        if self.tail is not None:
            return self.tail
        return np.zeros_like(self.matrices[0])


def _profiles(temporal_kind, dt):
    if temporal_kind == "hat":
        return HatProfile(dt), HatDerivProfile(dt), HatIntegralProfile(dt), 2
    if temporal_kind == "quad":
        return QuadProfile(dt), QuadDerivProfile(dt), None, 3
    raise ValueError(f"unknown temporal kind {temporal_kind!r}")


def delay_horizon(diameter, dt, c, support):
    i_max = math.ceil(diameter / (c * dt)) + support
    if i_max > DELAY_CAP:
        raise ValueError(
            f"delay horizon {i_max} exceeds cap {DELAY_CAP}; increase the "
            "time step or coarsen the mesh"
        )
    return i_max


def assemble_mot_efie(mesh, dt, c, eta, temporal_kind="hat", config=None,
                      rwg=None):
    """Sequences ({Z^s_d}, {Z^h_d with constant tail}) in the RWG basis."""
    cfg = config if config is not None else QuadratureConfig()
    ps = PanelSet(mesh, rwg if rwg is not None else build_rwg(mesh))
    prof, dprof, iprof, support = _profiles(temporal_kind, dt)
    horizon = delay_horizon(mesh.diameter(), dt, c, support)

    s_kernels = [RetardedScalar(dprof, d * dt, c, -eta / c)
                 for d in range(horizon + 1)]
    zs = assemble(ps, ps, s_kernels, "dot", cfg)

    if iprof is None:
        raise ValueError("the standard sequence needs the hat interpolator")
    h_kernels = [RetardedScalar(iprof, d * dt, c, -c * eta)
                 for d in range(horizon + 1)]
    zh = assemble(ps, ps, h_kernels, "divdiv", cfg)
    tail = assemble(ps, ps, StaticScalar(-c * eta * dt), "divdiv", cfg)

    return (
        DelaySequence(zs, dt=dt, label="Z^s"),
        DelaySequence(zh, tail=tail, dt=dt, label="Z^h"),
    )


def assemble_mot_mfie(bc, rwg, dt, c, temporal_kind="hat", config=None):
    """Sequence {M_d} with dual testing and RWG trial functions."""
    cfg = config if config is not None else QuadratureConfig()
    refined = bc.refined
    test_ps = PanelSet(refined, build_rwg(refined))
    src_ps = PanelSet(refined, parent_mesh=bc.mesh,
                      parent_map=bc.maps.child_tri_parent, parent_rwg=rwg)
    prof, dprof, _, support = _profiles(temporal_kind, dt)
    horizon = delay_horizon(bc.mesh.diameter(), dt, c, support)

    kernels = [RetardedCrossWeight(prof, dprof, d * dt, c)
               for d in range(horizon + 1)]
    blocks = assemble(test_ps, src_ps, kernels, "cross", cfg)
    mats = [np.asarray(bc.coeffs.T @ b) for b in blocks]
    return DelaySequence(mats, dt=dt, label="M")


def assemble_hq(mesh, dt, c, eta, config=None, rwg=None):
    """Sequence Hq(d): hypersingular layer with the quadratic interpolator
    and no temporal integration (the scaled derivative already applied)."""
    cfg = config if config is not None else QuadratureConfig()
    ps = PanelSet(mesh, rwg if rwg is not None else build_rwg(mesh))
    horizon = delay_horizon(mesh.diameter(), dt, c, 3)
    kernels = [RetardedScalar(QuadProfile(dt), d * dt, c, -c * eta)
               for d in range(horizon + 1)]
    return DelaySequence(assemble(ps, ps, kernels, "divdiv", cfg),
                         dt=dt, label="Hq")


def _project_cols(project, mat):
    """mat @ P for a symmetric projector given by its action on vectors."""
    return project(mat.T).T


def assemble_stabilized_sequences(zs_seq, hq_seq, m_seq, gram, projectors,
                                  dt_tilde, t0_scale):
    """Stabilized sequences ({Z~_d}, {X~_d}) from the component sequences.

    zs_seq, hq_seq: RWG sequences S[h](d) and Hq(d); m_seq: dual-tested
    M[h](d); gram: mixed Gram matrix array; projectors: RWG-side actions.
    """
    p = projectors
    horizon = max(zs_seq.horizon, hq_seq.horizon, m_seq.horizon) + 1

    z_mats, x_mats = [], []
    for d in range(horizon):
        s_d = zs_seq.term(d)
        s_prev = zs_seq.term(d - 1)
        inner = (_project_cols(p.project_lambda_h, s_d)
                 + _project_cols(p.project_sigma, (s_d - s_prev) / dt_tilde))
        smooth = dt_tilde * p.project_lambda_h(inner) + p.project_sigma(inner)
        hyper = t0_scale * p.project_sigma(
            _project_cols(p.project_sigma, hq_seq.term(d))
        )
        z_mats.append(smooth + hyper)

        # hat samples h_0(d dt) = delta_{d0} and h_1(d dt) = delta_{d1}
        x_sol = m_seq.term(d) + (0.5 * gram if d == 0 else 0.0)
        gram_step = (1.0 if d == 0 else 0.0) - (1.0 if d == 1 else 0.0)
        x_irr = (m_seq.term(d) - m_seq.term(d - 1) + gram_step * 0.5 * gram)
        x_mats.append(_project_cols(p.project_lambda_h, x_sol)
                      + _project_cols(p.project_sigma, x_irr / dt_tilde))

    return (
        DelaySequence(z_mats, dt=zs_seq.dt, label="Z~"),
        DelaySequence(x_mats, dt=zs_seq.dt, label="X~"),
    )
