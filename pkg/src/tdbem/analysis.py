"""Condition-number sweeps and companion-matrix stability analysis."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eig, lu_factor, lu_solve, svd

COMPANION_DIM_CAP = 20000


def condition_number(matrix):
    """sigma_max / sigma_min via full SVD; inf when singular."""
    s = svd(np.asarray(matrix), compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


@dataclass
class ConditionSweep:
    axis_name: str
    axis: list
    results: dict = field(default_factory=dict)  # label -> list of cond

    def add(self, label, values):
        self.results[label] = [float(v) for v in values]

    def ratio(self, label):
        vals = self.results[label]
        return max(vals) / min(vals)

    def to_csv(self, path, header_lines=()):
        with open(path, "w") as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            f.write(f"{self.axis_name},formulation,cond\n")
            for label, vals in self.results.items():
                for x, v in zip(self.axis, vals):
                    f.write(f"{x:.6e},{label},{v:.12e}\n")


def condition_sweep_dt(builder_map, mesh, dt_list, ctx_factory):
    """cond(T_0) per formulation over a list of time steps."""
    sweep = ConditionSweep("dt", list(dt_list))
    values = {label: [] for label in builder_map}
    for dt in dt_list:
        ctx = ctx_factory(mesh, dt)
        for label, builder in builder_map.items():
            system = builder(ctx)
            values[label].append(condition_number(system.t0_matrix))
    for label, vals in values.items():
        sweep.add(label, vals)
    return sweep


def condition_sweep_h(builder_map, meshes, dt, ctx_factory):
    """cond(T_0) per formulation over a mesh refinement family."""
    sizes = [m.mean_edge_length() for m in meshes]
    sweep = ConditionSweep("h", sizes)
    values = {label: [] for label in builder_map}
    for mesh in meshes:
        ctx = ctx_factory(mesh, dt)
        for label, builder in builder_map.items():
            system = builder(ctx)
            values[label].append(condition_number(system.t0_matrix))
    for label, vals in values.items():
        sweep.add(label, vals)
    return sweep


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    degree: int
    size: int
    differenced: bool           # tail removed by (1 - z^-1) multiplication
    artificial_count: int       # eigenvalues at 1 introduced by differencing

    @property
    def max_abs(self):
        return float(np.abs(self.eigenvalues).max()) if len(self.eigenvalues) else 0.0

    def to_json(self, path, classification=None, header=None):
        payload = {
            "header": header or {},
            "degree": self.degree,
            "size": self.size,
            "differenced": self.differenced,
            "artificial_count": self.artificial_count,
            "max_abs": self.max_abs,
            "eigenvalues": [[float(z.real), float(z.imag)]
                            for z in self.eigenvalues],
        }
        if classification is not None:
            payload["classification"] = classification
        with open(path, "w") as f:
            json.dump(payload, f, indent=1)


def _difference_sequence(mats, tail):
    """Multiply the z-transform by (1 - z^-1), terminating a constant tail."""
    out = [mats[0]]
    for i in range(1, len(mats)):
        out.append(mats[i] - mats[i - 1])
    if tail is not None:
        out.append(tail - mats[-1])
    else:
        out.append(-mats[-1])
    return out


def polynomial_spectrum(system):
    """Eigenvalues of P(z) = sum_d T_d z^(deg - d) via companion pencil."""
    seq = system.sequence
    mats = list(seq.matrices)
    differenced = seq.tail is not None
    artificial = 0
    if differenced:
        mats = _difference_sequence(mats, seq.tail)
        # differencing adds n roots at z = 1, but the tail pole of det P(z)
        # cancels rank(tail) of them
        n_tail = seq.tail.shape[0]
        artificial = n_tail - int(np.linalg.matrix_rank(seq.tail))
    n = mats[0].shape[0]
    degree = len(mats) - 1
    if degree == 0:
        return SpectrumReport(np.array([]), 0, n, differenced, 0)
    dim = n * degree
    if dim > COMPANION_DIM_CAP:
        raise ValueError(
            f"companion dimension {dim} exceeds {COMPANION_DIM_CAP}; use a "
            "coarser mesh or a larger time step"
        )
    # reduce to a standard eigenproblem by inverting the (well-conditioned
    # by construction) leading block once
    lead = lu_factor(mats[0])
    a = np.zeros((dim, dim))
    for d in range(1, degree + 1):
        a[:n, (d - 1) * n: d * n] = -lu_solve(lead, mats[d])
    if degree > 1:
        a[n:, :-n] = np.eye(dim - n)
    lam = eig(a, right=False)
    lam = lam[np.isfinite(lam)]
    return SpectrumReport(lam, degree, n, differenced, artificial)


def classify_spectrum(report, tol_dc=1e-6, tol_circle=1e-6):
    """Counts of dc modes, unit-circle resonant modes, and decaying modes."""
    lam = report.eigenvalues
    near_one = np.abs(lam - 1.0) < tol_dc
    dc_count = int(near_one.sum())
    if report.differenced:
        dc_count = max(dc_count - report.artificial_count, 0)
    on_circle = (np.abs(np.abs(lam) - 1.0) < tol_circle) & ~near_one
    resonant = lam[on_circle]
    # group into conjugate pairs by unique angle
    angles = np.angle(resonant[resonant.imag >= 0])
    pair_count = len(np.unique(np.round(angles, 9)))
    return {
        "dc_count": dc_count,
        "resonant_count": int(on_circle.sum()),
        "resonant_pairs": int(pair_count),
        "decaying_count": int((np.abs(lam) < 1.0 - tol_circle).sum()),
        "growing_count": int((np.abs(lam) > 1.0 + tol_circle).sum()),
        "max_abs": report.max_abs,
    }
