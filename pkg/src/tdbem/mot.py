"""Marching-on-in-time solve, current recovery, and probing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_solve


@dataclass
class SolveResult:
    label: str
    dt: float
    ys: list                     # y_0 = 0, y_1 .. y_NT
    currents: list                # physical RWG coefficients j_1 .. j_NT
    meta: dict = field(default_factory=dict)


def march(system, n_steps):
    """Block forward substitution through the lower-triangular system.

    y_i = T_0^{-1} (r_i - sum_{k>=1} T_k y_{i-k}); sequences with a constant
    tail T_inf use a running sum of old solutions, so each step costs one
    extra matrix-vector product regardless of history length.
    """
    if n_steps < 1:
        raise ValueError("need at least one time step")
    seq = system.sequence
    n = seq.term(0).shape[0]
    lu = system.factorization()
    horizon = seq.horizon
    tail = seq.tail
    ys = [np.zeros(n)]
    tail_sum = np.zeros(n)

    for i in range(1, n_steps + 1):
        rhs = np.asarray(system.rhs(i), dtype=float).copy()
        for k in range(1, min(i, horizon)):
            rhs -= seq.matrices[k] @ ys[i - k]
        if tail is not None:
            # accumulate solutions older than the explicit horizon
            if i - horizon >= 1:
                tail_sum += ys[i - horizon]
            rhs -= tail @ tail_sum
        if not np.all(np.isfinite(rhs)):
            raise FloatingPointError(f"marching diverged at step {i}")
        y = lu_solve(lu, rhs)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"marching diverged at step {i}")
        ys.append(y)
    return ys


def solve_system(system, n_steps):
    ys = march(system, n_steps)
    return SolveResult(system.label, system.meta.get("dt", 0.0), ys,
                       system.recover(ys), dict(system.meta))


def recover_current(ys, projectors, dt_tilde):
    """Physical coefficients j_i = P_lh y_i + P_sig (y_i - y_{i-1})/dt~."""
    out = []
    for i in range(1, len(ys)):
        out.append(projectors.project_lambda_h(ys[i])
                   + projectors.project_sigma(ys[i] - ys[i - 1]) / dt_tilde)
    return out


def locate_point(mesh, point, tol=1e-6):
    """Triangle containing (or nearest to) a surface point."""
    point = np.asarray(point, dtype=float)
    v = mesh.triangle_points()
    n = mesh.normals()
    d = point - v[:, 0, :]
    height = np.abs(np.einsum("td,td->t", d, n))
    # in-plane barycentric coordinates
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    a11 = np.einsum("td,td->t", e1, e1)
    a12 = np.einsum("td,td->t", e1, e2)
    a22 = np.einsum("td,td->t", e2, e2)
    b1 = np.einsum("td,td->t", d, e1)
    b2 = np.einsum("td,td->t", d, e2)
    det = a11 * a22 - a12**2
    u = (a22 * b1 - a12 * b2) / det
    w = (a11 * b2 - a12 * b1) / det
    sizes = np.sqrt(mesh.areas())
    inside = (u > -1e-9) & (w > -1e-9) & (u + w < 1 + 1e-9)
    score = np.where(inside, height, np.inf)
    best = int(np.argmin(score))
    if not np.isfinite(score[best]) or score[best] > tol * max(1.0, sizes[best]):
        # fall back to nearest centroid within tolerance of the surface scale
        cent = v.mean(axis=1)
        best = int(np.argmin(np.linalg.norm(cent - point, axis=1)))
        if np.linalg.norm(cent[best] - point) > sizes[best]:
            raise ValueError(f"point {point} is not on the surface")
    return best


def probe(currents, rwg, point):
    """Current vector time trace at a surface point; (N_T, 3) array."""
    tri = locate_point(rwg.mesh, point)
    trace = np.empty((len(currents), 3))
    for i, j in enumerate(currents):
        trace[i] = rwg.evaluate(np.asarray(j), tri, np.asarray(point))[0]
    return trace


def write_trace_csv(path, dt, trace, header_lines=()):
    """CSV trace: step, time_s, jx, jy, jz, |j|."""
    mag = np.linalg.norm(trace, axis=1)
    with open(path, "w") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        f.write("step,time_s,jx,jy,jz,jmag\n")
        for i, (row, m) in enumerate(zip(trace, mag), start=1):
            f.write(f"{i},{i * dt:.12e},{row[0]:.12e},{row[1]:.12e},"
                    f"{row[2]:.12e},{m:.12e}\n")
