"""Incident Gaussian plane-wave fields and tested right-hand sides."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import build_rwg
from .quadrature import triangle_rule, physical_points

EPS0 = 8.8541878128e-12
MU0 = 1.25663706212e-6


@dataclass(frozen=True)
class Medium:
    eps: float = EPS0
    mu: float = MU0

    @property
    def c(self):
        return 1.0 / np.sqrt(self.eps * self.mu)

    @property
    def eta(self):
        return np.sqrt(self.mu / self.eps)


VACUUM = Medium()
NORMALIZED = Medium(1.0, 1.0)


class PlaneWavePulse:
    """Gaussian-in-time plane wave.

    e(r, t) = (4A/(w sqrt(pi))) p exp(-(4/w)^2 (c(t - t0) - k.r)^2),
    h(r, t) = k x e / eta, with |p| = |k| = 1 and p.k = 0.
    """

    def __init__(self, amplitude=1.0, width=26.67, polarization=(1.0, 0.0, 0.0),
                 direction=(0.0, 0.0, 1.0), t0=80e-9, medium=VACUUM):
        p = np.asarray(polarization, dtype=float)
        k = np.asarray(direction, dtype=float)
        if np.linalg.norm(p) == 0 or np.linalg.norm(k) == 0:
            raise ValueError("polarization and direction must be nonzero")
        p = p / np.linalg.norm(p)
        k = k / np.linalg.norm(k)
        if abs(p @ k) > 1e-12:
            raise ValueError("polarization must be orthogonal to direction")
        if width <= 0:
            raise ValueError("width must be positive")
        self.amplitude = float(amplitude)
        self.width = float(width)
        self.polarization = p
        self.direction = k
        self.t0 = float(t0)
        self.medium = medium

    def _envelope(self, r, t):
        c = self.medium.c
        arg = (4.0 / self.width) * (c * (t - self.t0) - r @ self.direction)
        peak = 4.0 * self.amplitude / (self.width * np.sqrt(np.pi))
        return peak * np.exp(-(arg ** 2))

    def electric(self, r, t):
        r = np.asarray(r, dtype=float)
        return self._envelope(r, t)[..., None] * self.polarization

    def magnetic(self, r, t):
        e = self.electric(r, t)
        return np.cross(self.direction, e) / self.medium.eta


class RwgTester:
    """Cached quadrature for [e(t)]_m = <n x f_m, n x e_in(t)> = int f_m . e_in."""

    def __init__(self, mesh, rwg=None, order=4):
        rwg = rwg if rwg is not None else build_rwg(mesh)
        bary, w = triangle_rule(order)
        self.points = physical_points(mesh.triangle_points(), bary)
        self.weights = w[None, :] * mesh.areas()[:, None]
        tris = np.arange(mesh.num_triangles)
        self.fvals = rwg.eval_local(tris, self.points)   # (nt, 3, nq, 3)
        self.rows = mesh.tri_edges
        self.num_edges = mesh.num_edges

    def test(self, field_fn, t):
        e = field_fn(self.points, t)
        local = np.einsum("tkqd,tqd,tq->tk", self.fvals, e, self.weights)
        out = np.zeros(self.num_edges)
        np.add.at(out, self.rows, local)
        return out


class DualTester:
    """Same contraction for dual functions via the refined coefficient map."""

    def __init__(self, bc, order=4):
        self._ref = RwgTester(bc.refined, build_rwg(bc.refined), order)
        self.coeffs = bc.coeffs

    def test(self, field_fn, t):
        return np.asarray(self.coeffs.T @ self._ref.test(field_fn, t))


def semi_discrete_rhs(pulse, rwg_tester, dual_tester, t):
    """Point-in-time tested incident fields (e(t), h(t))."""
    e = rwg_tester.test(pulse.electric, t)
    h = dual_tester.test(pulse.magnetic, t)
    return e, h
