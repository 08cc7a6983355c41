"""Quasi-Helmholtz projectors on RWG and dual coefficient spaces.

The star matrix Sigma (edge x face incidence weighted by RWG divergence
signs) and the loop matrix Lambda (edge x vertex incidence) satisfy
Sigma^T Lambda = 0.  The projectors

    P_sigma    = Sigma (Sigma^T Sigma)^+ Sigma^T,   P_lambda_h = I - P_sigma
    P_lambda   = Lambda (Lambda^T Lambda)^+ Lambda^T, P_sigma_h = I - P_lambda

split RWG coefficient vectors (first pair) and dual coefficient vectors
(second pair) into irrotational and solenoidal-plus-harmonic parts without
constructing global loops.  Both Gram-type matrices are graph Laplacians
whose nullspace on a connected closed mesh is the constant vector; the
pseudoinverse is realized as a deflated direct solve: remove the constant
component from the right-hand side, solve the rank-completed system
L + rho c c^T, and remove the constant component again.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .mesh import connectivity_lambda, connectivity_sigma


class _DeflatedLaplacian:
    """Pseudoinverse action of a graph Laplacian with constant nullspace."""

    def __init__(self, lap):
        lap = sparse.csc_matrix(lap)
        n = lap.shape[0]
        self.c = np.full(n, 1.0 / np.sqrt(n))
        rho = lap.diagonal().mean()
        shifted = lap + rho * sparse.csc_matrix(np.outer(self.c, self.c))
        self.solver = splu(shifted)

    def apply(self, b):
        b = b - self.c[:, None] * (self.c @ b) if b.ndim == 2 else b - self.c * (self.c @ b)
        x = self.solver.solve(b)
        if x.ndim == 2:
            return x - self.c[:, None] * (self.c @ x)
        return x - self.c * (self.c @ x)


class QhzProjectors:
    """Projector actions for one mesh; columns accepted for batched use."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.lam = connectivity_lambda(mesh)    # (N_E, N_V)
        self.sig = connectivity_sigma(mesh)     # (N_E, N_C)
        self.harmonic_dimension = mesh.harmonic_dimension
        self._sig_pinv = _DeflatedLaplacian((self.sig.T @ self.sig).tocsc())
        self._lam_pinv = _DeflatedLaplacian((self.lam.T @ self.lam).tocsc())

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.mesh.num_edges:
            raise ValueError(
                f"coefficient vector of length {x.shape[0]}, expected "
                f"{self.mesh.num_edges}"
            )
        return x

    # -- RWG side ------------------------------------------------------------

    def project_sigma(self, x):
        x = self._check(x)
        return self.sig @ self._sig_pinv.apply(self.sig.T @ x)

    def project_lambda_h(self, x):
        x = self._check(x)
        return x - self.project_sigma(x)

    # -- dual side -----------------------------------------------------------

    def project_lambda(self, x):
        x = self._check(x)
        return self.lam @ self._lam_pinv.apply(self.lam.T @ x)

    def project_sigma_h(self, x):
        x = self._check(x)
        return x - self.project_lambda(x)

    # -- dense forms for analysis ---------------------------------------------

    def densify(self, which):
        eye = np.eye(self.mesh.num_edges)
        fn = {
            "sigma": self.project_sigma,
            "lambda_h": self.project_lambda_h,
            "lambda": self.project_lambda,
            "sigma_h": self.project_sigma_h,
        }[which]
        return fn(eye)

    def expected_ranks(self):
        """Exact ranks of the four projectors for a closed connected mesh."""
        nv, nc = self.mesh.num_vertices, self.mesh.num_triangles
        nh = self.harmonic_dimension
        return {
            "sigma": nc - 1,
            "lambda": nv - 1,
            "lambda_h": nv - 1 + nh,
            "sigma_h": nc - 1 + nh,
        }
