"""Kernel evaluators for the layer-potential pair integrals.

Two families are used by the assembly engine:

* scalar kernels k(R) multiplying either f_m . f_n or div f_m div f_n; these
  expose a 1/(4 pi R) static weight so touching pairs can be integrated by
  singularity extraction, with the smooth remainder handled by quadrature;
* cross weights w(R) multiplying f_m . ((r - r') x f_n), arising from the
  gradient of the scalar potential.

Both damped-static (real exponential decay) and retarded (time-shifted
temporal profile) variants are provided.  Retarded kernels also report the
radii at which their temporal profile has a kink, so the assembler can
optionally split the radial integration there.
"""

from __future__ import annotations

import numpy as np

from . import temporal

_FOUR_PI = 4.0 * np.pi
_R_EPS = 1e-12  # below this the smooth remainder is replaced by its limit


# -- temporal profiles -----------------------------------------------------------
#
# A profile packages a function of the retarded argument tau together with
# its left limits, needed because the retarded argument approaches the
# nominal shift from below as R -> 0+.


class HatProfile:
    """Piecewise-linear interpolation function."""

    def __init__(self, dt):
        self.dt = dt

    def val(self, tau):
        return temporal.hat(tau, self.dt)

    def left_value(self, t):
        return temporal.hat(t, self.dt)  # continuous

    def left_slope(self, t):
        dt = self.dt
        if -dt < t <= 0.0:
            return 1.0 / dt
        if 0.0 < t <= dt:
            return -1.0 / dt
        return 0.0

    def kinks(self):
        return (-self.dt, 0.0, self.dt)


class HatDerivProfile:
    """Derivative of the hat, piecewise constant."""

    def __init__(self, dt):
        self.dt = dt

    def val(self, tau):
        return temporal.hat_deriv(tau, self.dt)

    def left_value(self, t):
        dt = self.dt
        if -dt < t <= 0.0:
            return 1.0 / dt
        if 0.0 < t <= dt:
            return -1.0 / dt
        return 0.0

    def left_slope(self, t):
        return 0.0

    def kinks(self):
        return (-self.dt, 0.0, self.dt)


class HatIntegralProfile:
    """Running integral of the hat; saturates at dt."""

    def __init__(self, dt):
        self.dt = dt

    def val(self, tau):
        return temporal.hat_integral(tau, self.dt)

    def left_value(self, t):
        return float(temporal.hat_integral(t, self.dt))

    def left_slope(self, t):
        return float(temporal.hat(t, self.dt))

    def kinks(self):
        return (-self.dt, 0.0, self.dt)


class QuadProfile:
    """C^1 piecewise-quadratic interpolation function."""

    def __init__(self, dt):
        self.dt = dt

    def val(self, tau):
        return temporal.quad(tau, self.dt)

    def left_value(self, t):
        return float(temporal.quad(t, self.dt))

    def left_slope(self, t):
        return float(temporal.quad_deriv(t, self.dt))

    def kinks(self):
        return (-self.dt, 0.0, self.dt, 2.0 * self.dt)


class QuadDerivProfile:
    """Derivative of the quadratic, continuous piecewise linear."""

    def __init__(self, dt):
        self.dt = dt

    def val(self, tau):
        return temporal.quad_deriv(tau, self.dt)

    def left_value(self, t):
        return float(temporal.quad_deriv(t, self.dt))

    def left_slope(self, t):
        dt, x = self.dt, t / self.dt
        if -1.0 < x <= 0.0:
            return 1.0 / dt**2
        if 0.0 < x <= 1.0:
            return -2.0 / dt**2
        if 1.0 < x <= 2.0:
            return 1.0 / dt**2
        return 0.0

    def kinks(self):
        return (-self.dt, 0.0, self.dt, 2.0 * self.dt)


# -- scalar kernels ---------------------------------------------------------------


class StaticScalar:
    """k(R) = prefactor / (4 pi R)."""

    def __init__(self, prefactor=1.0):
        self.static_weight = prefactor

    def values(self, r):
        return self.static_weight / (_FOUR_PI * np.maximum(r, _R_EPS))

    def smooth(self, r):
        return np.zeros_like(r)

    def breakpoints(self):
        return ()


class DampedScalar:
    """k(R) = prefactor * exp(-kappa R) / (4 pi R) with real kappa > 0."""

    def __init__(self, kappa, prefactor=1.0):
        self.kappa = kappa
        self.prefactor = prefactor
        self.static_weight = prefactor

    def values(self, r):
        return self.prefactor * np.exp(-self.kappa * r) / (_FOUR_PI * np.maximum(r, _R_EPS))

    def smooth(self, r):
        out = self.prefactor * np.expm1(-self.kappa * r) / (
            _FOUR_PI * np.maximum(r, _R_EPS)
        )
        limit = -self.prefactor * self.kappa / _FOUR_PI
        return np.where(r < _R_EPS, limit, out)

    def breakpoints(self):
        return ()


class RetardedScalar:
    """k(R) = prefactor * profile(t0 - R/c) / (4 pi R)."""

    def __init__(self, profile, t0, c, prefactor=1.0):
        self.profile = profile
        self.t0 = t0
        self.c = c
        self.prefactor = prefactor
        self.static_weight = prefactor * profile.left_value(t0)

    def values(self, r):
        tau = self.t0 - r / self.c
        return self.prefactor * self.profile.val(tau) / (_FOUR_PI * np.maximum(r, _R_EPS))

    def smooth(self, r):
        tau = self.t0 - r / self.c
        num = self.prefactor * self.profile.val(tau) - self.static_weight
        out = num / (_FOUR_PI * np.maximum(r, _R_EPS))
        limit = -self.prefactor * self.profile.left_slope(self.t0) / (_FOUR_PI * self.c)
        return np.where(r < _R_EPS, limit, out)

    def breakpoints(self):
        radii = [self.c * (self.t0 - tk) for tk in self.profile.kinks()]
        return tuple(rb for rb in radii if rb > 0.0)


# -- cross weights ----------------------------------------------------------------


class DampedCrossWeight:
    """w(R) = prefactor * (1 + kappa R) exp(-kappa R) / (4 pi R^3).

    Multiplies f_m . (u x f_n) with u = r - r'; kappa = 0 gives the static
    double-layer weight.
    """

    def __init__(self, kappa=0.0, prefactor=1.0):
        self.kappa = kappa
        self.prefactor = prefactor

    def values(self, r):
        rs = np.maximum(r, _R_EPS)
        return self.prefactor * (1.0 + self.kappa * r) * np.exp(-self.kappa * r) / (
            _FOUR_PI * rs**3
        )

    def breakpoints(self):
        return ()


class RetardedCrossWeight:
    """w(R) = prefactor * [b(tau)/R^3 + b'(tau)/(c R^2)] / (4 pi), tau = t0 - R/c."""

    def __init__(self, profile, deriv_profile, t0, c, prefactor=1.0):
        self.profile = profile
        self.deriv_profile = deriv_profile
        self.t0 = t0
        self.c = c
        self.prefactor = prefactor

    def values(self, r):
        rs = np.maximum(r, _R_EPS)
        tau = self.t0 - r / self.c
        return self.prefactor * (
            self.profile.val(tau) / rs**3 + self.deriv_profile.val(tau) / (self.c * rs**2)
        ) / _FOUR_PI

    def breakpoints(self):
        kinks = set(self.profile.kinks()) | set(self.deriv_profile.kinks())
        radii = [self.c * (self.t0 - tk) for tk in kinks]
        return tuple(sorted(rb for rb in radii if rb > 0.0))
