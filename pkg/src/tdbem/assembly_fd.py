"""Yukawa-type frequency-domain matrices and the stabilized operator blocks.

All operators are evaluated at the purely imaginary wave number -j kappa
with kappa = 1/(c dt), which turns every kernel into a real decaying
exponential; the whole module works in real arithmetic.

Entry formulas (the n x factors of the operator and of the rotated testing
cancel for tangential fields):

    [Z^s]_mn = -kappa eta  int int g_m . g_n' exp(-kappa R)/(4 pi R)
    [Z^h]_mn = -(eta/kappa) int int div g_m div g_n' exp(-kappa R)/(4 pi R)
    [M]_mn   = + int int g_m . ((r - r') x f_n') (1 + kappa R) exp(-kappa R)/(4 pi R^3)

with dual functions g on the barycentric refinement and RWG functions f on
the coarse mesh.  Dual matrices are computed on the refinement and
sandwiched with the sparse dual coefficient map; the hypersingular block is
assembled as charge-incidence products, so it annihilates solenoidal dual
vectors to machine precision.
"""

from __future__ import annotations

import numpy as np

from .assembly import PanelSet, QuadratureConfig, assemble
from .basis import build_rwg
from .kernels import DampedScalar, DampedCrossWeight


def _refined_panels(bc):
    """Test and source panel sets on the refinement for dual-dual operators."""
    refined = bc.refined
    ref_rwg = build_rwg(refined)
    return PanelSet(refined, ref_rwg)


def assemble_yukawa_efie(bc, kappa, eta, config=None):
    """Dense (Z^s, Z^h) in the dual basis at wave number -j kappa."""
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    cfg = config if config is not None else QuadratureConfig()
    ps = _refined_panels(bc)
    zs_ref = assemble(ps, ps, DampedScalar(kappa, -kappa * eta), "dot", cfg)
    zh_ref = assemble(ps, ps, DampedScalar(kappa, -eta / kappa), "divdiv", cfg)
    c = bc.coeffs
    return np.asarray(c.T @ zs_ref @ c), np.asarray(c.T @ zh_ref @ c)


def assemble_yukawa_mfie(bc, rwg, kappa, config=None):
    """Dense M with dual testing and RWG trial functions; kappa >= 0."""
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    cfg = config if config is not None else QuadratureConfig()
    refined = bc.refined
    ref_rwg = build_rwg(refined)
    test_ps = PanelSet(refined, ref_rwg)
    src_ps = PanelSet(refined, parent_mesh=bc.mesh,
                      parent_map=bc.maps.child_tri_parent, parent_rwg=rwg)
    m_ref = assemble(test_ps, src_ps, DampedCrossWeight(kappa), "cross", cfg)
    return np.asarray(bc.coeffs.T @ m_ref)


def assemble_static_mfie(bc, rwg, config=None):
    """Static limit M_0 (kappa = 0)."""
    return assemble_yukawa_mfie(bc, rwg, 0.0, config)


class ComposedOperator:
    """Matrix-free composition with on-demand densification."""

    def __init__(self, apply_fn, shape):
        self._apply = apply_fn
        self.shape = shape

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.shape[1]:
            raise ValueError(
                f"operand of length {x.shape[0]}, expected {self.shape[1]}"
            )
        return self._apply(x)

    def densify(self):
        return self.apply(np.eye(self.shape[1]))


def build_stabilized_Z(zs, zh, projectors, dt_tilde):
    """Z-tilde = (dt~ P_sig_h + P_lam) Z^s (P_sig_h + P_lam/dt~)
                 + (1/dt~) P_lam Z^h P_lam, on dual coefficients."""
    p = projectors
    n = zs.shape[0]

    def apply(x):
        inner = p.project_sigma_h(x) + p.project_lambda(x) / dt_tilde
        smooth = zs @ inner
        smooth = dt_tilde * p.project_sigma_h(smooth) + p.project_lambda(smooth)
        hyper = p.project_lambda(zh @ p.project_lambda(x)) / dt_tilde
        return smooth + hyper

    return ComposedOperator(apply, (n, n))


def build_stabilized_X(m_matrix, gram, projectors, dt_tilde):
    """X-tilde = (dt~ P_sig_h + P_lam)(G/2 - M), RWG input, dual-test output."""
    p = projectors
    n = m_matrix.shape[0]
    half_g = 0.5 * gram

    def apply(x):
        v = half_g @ x - m_matrix @ x
        return dt_tilde * p.project_sigma_h(v) + p.project_lambda(v)

    return ComposedOperator(apply, (n, m_matrix.shape[1]))
