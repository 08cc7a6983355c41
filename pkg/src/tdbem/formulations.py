"""Complete marching systems for the four compared formulations.

Every system carries a dense delay sequence {T_d}, a right-hand-side
callback r_k, and a current-recovery rule.  The stabilized combined system
solves for the auxiliary unknown y; the others solve for the RWG current
directly.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, solve

from .assembly import QuadratureConfig
from .assembly_fd import (
    assemble_yukawa_efie, assemble_yukawa_mfie, assemble_static_mfie,
    build_stabilized_Z, build_stabilized_X,
)
from .assembly_td import (
    DelaySequence, assemble_mot_efie, assemble_mot_mfie, assemble_hq,
    assemble_stabilized_sequences,
)
from .basis import build_rwg, build_bc, assemble_gram_mixed, assemble_gram_rotated
from .excitation import VACUUM, RwgTester, DualTester
from .mesh import barycentric_refinement
from .qhz import QhzProjectors


class SolverContext:
    """Shared geometry, bases, and lazily cached operator blocks."""

    def __init__(self, mesh, dt, pulse=None, medium=VACUUM, config=None,
                 quad_order_rhs=4):
        self.mesh = mesh
        self.dt = float(dt)
        self.medium = medium
        self.pulse = pulse
        self.config = config if config is not None else QuadratureConfig()

        self.rwg = build_rwg(mesh)
        self.refined, self.maps = barycentric_refinement(mesh)
        self.bc = build_bc(mesh, self.refined, self.maps)
        self.projectors = QhzProjectors(mesh)

        self.diameter = mesh.diameter()
        self.t0_scale = self.diameter / medium.c
        self.dt_tilde = self.dt / self.t0_scale
        self.kappa = 1.0 / (medium.c * self.dt)

        self.gram = assemble_gram_mixed(self.bc, self.rwg)
        self._cache = {}
        if pulse is not None:
            self.rwg_tester = RwgTester(mesh, self.rwg, quad_order_rhs)
            self.dual_tester = DualTester(self.bc, quad_order_rhs)

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- shared blocks ---------------------------------------------------------

    def efie_sequences(self):
        return self._get("efie", lambda: assemble_mot_efie(
            self.mesh, self.dt, self.medium.c, self.medium.eta,
            config=self.config, rwg=self.rwg))

    def mfie_sequence(self):
        return self._get("mfie", lambda: assemble_mot_mfie(
            self.bc, self.rwg, self.dt, self.medium.c, config=self.config))

    def hq_sequence(self):
        return self._get("hq", lambda: assemble_hq(
            self.mesh, self.dt, self.medium.c, self.medium.eta,
            config=self.config, rwg=self.rwg))

    def gram_rotated_rwg(self):
        return self._get("gram_ffx", lambda: assemble_gram_rotated(
            self.mesh, self.rwg, self.mesh, self.rwg))

    def fd_efie(self):
        return self._get("fd_efie", lambda: assemble_yukawa_efie(
            self.bc, self.kappa, self.medium.eta, config=self.config))

    def fd_mfie(self):
        return self._get("fd_mfie", lambda: assemble_yukawa_mfie(
            self.bc, self.rwg, self.kappa, config=self.config))

    def fd_static_mfie(self):
        return self._get("fd_m0", lambda: assemble_static_mfie(
            self.bc, self.rwg, config=self.config))

    def tested_e(self, k):
        return self.rwg_tester.test(self.pulse.electric, k * self.dt)

    def tested_h(self, k):
        return self.dual_tester.test(self.pulse.magnetic, k * self.dt)


class MotSystem:
    """Delay sequence plus right-hand side and recovery rule."""

    def __init__(self, label, sequence, rhs_fn, recover_fn=None, meta=None):
        self.label = label
        self.sequence = sequence
        self.rhs = rhs_fn
        self._recover = recover_fn
        self.meta = meta or {}
        self._lu = None

    @property
    def t0_matrix(self):
        return self.sequence.term(0)

    def factorization(self):
        if self._lu is None:
            self._lu = lu_factor(self.t0_matrix)
        return self._lu

    def recover(self, ys):
        """Physical RWG coefficients from the marched unknowns."""
        if self._recover is None:
            return ys[1:]
        return self._recover(ys)


def build_td_efie(ctx):
    zs_seq, zh_seq = ctx.efie_sequences()
    n = max(zs_seq.horizon, zh_seq.horizon)
    mats = [zs_seq.term(d) + zh_seq.term(d) for d in range(n)]
    seq = DelaySequence(mats, tail=zh_seq.tail, dt=ctx.dt, label="TD-EFIE")

    def rhs(k):
        return -ctx.tested_e(k)

    return MotSystem("td-efie", seq, rhs, meta={"dt": ctx.dt})


def build_td_mfie(ctx):
    m_seq = ctx.mfie_sequence()
    g = ctx.gram.matrix
    mats = [m_seq.term(d) + (0.5 * g if d == 0 else 0.0)
            for d in range(max(m_seq.horizon, 1))]
    seq = DelaySequence(mats, dt=ctx.dt, label="TD-MFIE")

    def rhs(k):
        return ctx.tested_h(k)

    return MotSystem("td-mfie", seq, rhs, meta={"dt": ctx.dt})


def build_mixed_cfie(ctx, alpha=0.5):
    """Baseline combination alpha EFIE + (1-alpha) eta (mapped MFIE).

    The dual-tested MFIE residual is transported into the rotated-RWG test
    dual space by G_map = G_fx G^{-1}, with G_fx the rotated-RWG/RWG Gram.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    eta = ctx.medium.eta
    efie = build_td_efie(ctx)
    m_seq = ctx.mfie_sequence()
    g = ctx.gram.matrix
    g_map = ctx.gram_rotated_rwg() @ np.linalg.inv(g)

    n = max(efie.sequence.horizon, m_seq.horizon)
    mats = []
    for d in range(n):
        mfie_d = m_seq.term(d) + (0.5 * g if d == 0 else 0.0)
        mats.append(alpha * efie.sequence.term(d)
                    + (1.0 - alpha) * eta * (g_map @ mfie_d))
    tail = alpha * efie.sequence.tail if efie.sequence.tail is not None else None
    seq = DelaySequence(mats, tail=tail, dt=ctx.dt, label="mixed TD-CFIE")

    def rhs(k):
        return (-alpha * ctx.tested_e(k)
                + (1.0 - alpha) * eta * (g_map @ ctx.tested_h(k)))

    return MotSystem("cfie-mixed", seq, rhs, meta={"dt": ctx.dt, "alpha": alpha})


def build_qhp_cfie(ctx, coupling=None):
    """Stabilized combined system with the auxiliary unknown y."""
    eta = ctx.medium.eta
    xi = eta**2 if coupling is None else float(coupling)
    p = ctx.projectors
    g = ctx.gram.matrix

    zs_fd, zh_fd = ctx.fd_efie()
    m_fd = ctx.fd_mfie()
    z_tilde = build_stabilized_Z(zs_fd, zh_fd, p, ctx.dt_tilde).densify()
    x_tilde = build_stabilized_X(m_fd, g, p, ctx.dt_tilde).densify()

    # Z~ G^-T and xi X~ G^-1 as dense left factors
    left_z = solve(g, z_tilde.T).T
    left_x = xi * solve(g.T, x_tilde.T).T

    zs_seq, _ = ctx.efie_sequences()
    zt_seq, xt_seq = assemble_stabilized_sequences(
        zs_seq, ctx.hq_sequence(), ctx.mfie_sequence(), g, p,
        ctx.dt_tilde, ctx.t0_scale,
    )
    n = max(zt_seq.horizon, xt_seq.horizon)
    mats = [left_z @ zt_seq.term(d) + left_x @ xt_seq.term(d) for d in range(n)]
    seq = DelaySequence(mats, dt=ctx.dt, label="qHP TD-CFIE")

    def rhs(k):
        e = ctx.tested_e(k)
        e_bal = ctx.dt_tilde * p.project_lambda_h(e) + p.project_sigma(e)
        return -left_z @ e_bal + left_x @ ctx.tested_h(k)

    def recover(ys):
        out = []
        for i in range(1, len(ys)):
            out.append(p.project_lambda_h(ys[i])
                       + p.project_sigma(ys[i] - ys[i - 1]) / ctx.dt_tilde)
        return out

    return MotSystem("cfie-qhp", seq, rhs, recover_fn=recover,
                     meta={"dt": ctx.dt, "coupling": xi,
                           "dt_tilde": ctx.dt_tilde, "kappa": ctx.kappa})


BUILDERS = {
    "efie": build_td_efie,
    "mfie": build_td_mfie,
    "cfie-mixed": build_mixed_cfie,
    "cfie-qhp": build_qhp_cfie,
}
