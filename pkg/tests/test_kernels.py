import numpy as np
import pytest

from tdbem import kernels as K

DT = 0.3
C = 2.0
FOUR_PI = 4.0 * np.pi


def test_static_scalar():
    k = K.StaticScalar(3.0)
    r = np.array([0.5, 2.0])
    assert np.allclose(k.values(r), 3.0 / (FOUR_PI * r))
    assert k.static_weight == 3.0
    assert np.all(k.smooth(r) == 0.0)


def test_damped_scalar_split():
    k = K.DampedScalar(1.7, 2.0)
    r = np.array([1e-9, 0.3, 1.5])
    full = k.values(r)
    split = k.static_weight / (FOUR_PI * np.maximum(r, 1e-12)) + k.smooth(r)
    assert np.allclose(full, split, rtol=1e-9)
    # smooth part limit at r -> 0 is -pref*kappa/(4 pi)
    assert k.smooth(np.array([0.0]))[0] == pytest.approx(-2.0 * 1.7 / FOUR_PI)


def test_retarded_scalar_values():
    prof = K.HatDerivProfile(DT)
    t0 = 2 * DT
    k = K.RetardedScalar(prof, t0, C, -5.0)
    r = np.array([0.1, 0.45])
    tau = t0 - r / C
    expect = -5.0 * np.array([prof.val(t) for t in tau]) / (FOUR_PI * r)
    assert np.allclose(k.values(r), expect)
    # static weight is the left limit of the profile at the nominal shift
    assert k.static_weight == -5.0 * prof.left_value(t0)


def test_retarded_scalar_split_consistency():
    for prof in (K.HatProfile(DT), K.HatIntegralProfile(DT), K.QuadProfile(DT)):
        k = K.RetardedScalar(prof, DT, C, 2.5)
        r = np.linspace(1e-6, 1.2, 57)
        assert np.allclose(
            k.values(r), k.static_weight / (FOUR_PI * r) + k.smooth(r),
            rtol=1e-6, atol=1e-9)


def test_breakpoints_positive_radii():
    k = K.RetardedScalar(K.HatProfile(DT), 2 * DT, C, 1.0)
    # kinks at tau in {-dt, 0, dt} -> radii c*(t0 - tau) > 0
    assert np.allclose(sorted(k.breakpoints()), sorted(
        C * (2 * DT - t) for t in (-DT, 0.0, DT)))
    k0 = K.RetardedScalar(K.HatProfile(DT), 0.0, C, 1.0)
    assert np.allclose(sorted(k0.breakpoints()), [C * DT])


def test_profile_left_values():
    d = K.HatDerivProfile(DT)
    assert d.left_value(0.0) == pytest.approx(1.0 / DT)
    assert d.left_value(DT) == pytest.approx(-1.0 / DT)
    assert d.left_value(2 * DT) == 0.0
    h = K.HatProfile(DT)
    assert h.left_value(0.0) == 1.0
    assert h.left_slope(0.0) == pytest.approx(1.0 / DT)
    i = K.HatIntegralProfile(DT)
    assert i.left_value(DT) == pytest.approx(DT)
    assert i.left_slope(0.0) == pytest.approx(1.0)
    q = K.QuadProfile(DT)
    assert q.left_value(0.0) == pytest.approx(0.5)
    assert q.left_slope(0.0) == pytest.approx(1.0 / DT)


def test_damped_cross_weight():
    w = K.DampedCrossWeight(1.3, 2.0)
    r = np.array([0.2, 1.0])
    expect = 2.0 * (1 + 1.3 * r) * np.exp(-1.3 * r) / (FOUR_PI * r**3)
    assert np.allclose(w.values(r), expect)
    w0 = K.DampedCrossWeight(0.0)
    assert np.allclose(w0.values(r), 1.0 / (FOUR_PI * r**3))


def test_retarded_cross_weight():
    prof = K.HatProfile(DT)
    dprof = K.HatDerivProfile(DT)
    w = K.RetardedCrossWeight(prof, dprof, DT, C)
    r = np.array([0.05, 0.31])
    tau = DT - r / C
    expect = (np.array([prof.val(t) for t in tau]) / r**3
              + np.array([dprof.val(t) for t in tau]) / (C * r**2)) / FOUR_PI
    assert np.allclose(w.values(r), expect)
    assert len(w.breakpoints()) > 0


def test_retarded_cross_large_step_collapses_to_static():
    """With c dt above the maximal distance the d=0 weight is exactly the
    static double-layer weight and the d=1 weight vanishes."""
    dt = 10.0
    prof = K.HatProfile(dt)
    dprof = K.HatDerivProfile(dt)
    r = np.linspace(0.01, 5.0, 100)  # all below c*dt
    w0 = K.RetardedCrossWeight(prof, dprof, 0.0, 1.0).values(r)
    assert np.allclose(w0, 1.0 / (FOUR_PI * r**3), rtol=1e-12)
    w1 = K.RetardedCrossWeight(prof, dprof, dt, 1.0).values(r)
    assert np.abs(w1 * r**3).max() < 1e-14
