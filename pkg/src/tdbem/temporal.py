"""Temporal basis functions for marching-on-in-time discretization.

The lowest-order compatible pair: the piecewise-linear hat function h and
the continuously differentiable piecewise-quadratic q, with the exact
relation q_i'(t) = (h_i(t) - h_{i+1}(t)) / dt.

All evaluators are closed-form and vectorized; the shifted function with
index i is the base function evaluated at t - i*dt.
"""

from __future__ import annotations

import numpy as np


def hat(t, dt):
    """h(t): 1 at 0, linear to 0 at +-dt."""
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < dt, 1.0 - np.abs(t) / dt, 0.0)


def hat_deriv(t, dt):
    """h'(t), piecewise constant with jumps at -dt, 0, dt."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out = np.where((t > -dt) & (t < 0.0), 1.0 / dt, out)
    out = np.where((t >= 0.0) & (t < dt), -1.0 / dt, out)
    return out


def hat_integral(t, dt):
    """Running integral of h over (-inf, t]; saturates at dt."""
    t = np.asarray(t, dtype=float)
    rise = 0.5 * (t + dt) ** 2 / dt
    fall = 0.5 * dt + t - 0.5 * t * t / dt
    out = np.where(t <= -dt, 0.0, np.where(t < 0.0, rise, fall))
    return np.where(t >= dt, dt, out)


def quad(t, dt):
    """q(t): C^1 piecewise quadratic supported on [-dt, 2 dt]."""
    t = np.asarray(t, dtype=float)
    x = t / dt
    out = np.zeros_like(t)
    out = np.where((x >= -1.0) & (x < 0.0), 0.5 * (x + 1.0) ** 2, out)
    out = np.where((x >= 0.0) & (x < 1.0), 0.5 - x * x + x, out)
    out = np.where((x >= 1.0) & (x <= 2.0), 0.5 * (x - 2.0) ** 2, out)
    return out


def quad_deriv(t, dt):
    """q'(t) = (h(t) - h(t - dt)) / dt, evaluated in closed form."""
    t = np.asarray(t, dtype=float)
    x = t / dt
    out = np.zeros_like(t)
    out = np.where((x >= -1.0) & (x < 0.0), (x + 1.0) / dt, out)
    out = np.where((x >= 0.0) & (x < 1.0), (1.0 - 2.0 * x) / dt, out)
    out = np.where((x >= 1.0) & (x <= 2.0), (x - 2.0) / dt, out)
    return out


_FUNCS = {
    "hat": (hat, hat_deriv),
    "quad": (quad, quad_deriv),
}


def eval_temporal(basis_kind, i, t, dt):
    """Value and derivative of the i-shifted basis function at time t."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    try:
        f, fp = _FUNCS[basis_kind]
    except KeyError:
        raise ValueError(f"unknown temporal basis {basis_kind!r}") from None
    tau = np.asarray(t, dtype=float) - i * dt
    return f(tau, dt), fp(tau, dt)


def support_width(basis_kind):
    """Support width in units of dt (2 for hat, 3 for quad)."""
    return {"hat": 2, "quad": 3}[basis_kind]
