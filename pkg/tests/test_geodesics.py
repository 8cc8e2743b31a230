import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from lightwell import LaunchRule, ProfileSpec
from lightwell.geodesics import (Eikonal, EikonalState, Polar, PolarRayState, ReducedRadialState,
                                 SingularityError, angular_momentum, eikonal_from_polar,
                                 null_constraint, photon_launch, reduced_from_polar, reduced_phi_rate,
                                 rhs_eikonal, rhs_polar, rhs_reduced)
from lightwell.integrator import IntegratorConfig, integrate
from lightwell.launch import circular_radius
from lightwell.sweep import build_system

SPECS = [ProfileSpec.gaussian(), ProfileSpec.mexican_hat(), ProfileSpec.double_gaussian(),
         ProfileSpec.gaussian(3.3, 0.5, bounds=(0.5, 3.8))]
IDS = ["gaussian", "mexican_hat", "double_gaussian", "gaussian-3.3-0.5"]


def test_homogeneous_centrifugal_only():
    spec = ProfileSpec.homogeneous(1.4)
    for r, w in [(0.5, 0.3), (2.0, 1.1), (7.0, 0.01)]:
        d = rhs_polar(spec, PolarRayState(r, 0.2, 0.0, w))
        assert d[2] == pytest.approx(r * w * w, rel=1e-15)
        assert d[3] == 0.0


def test_gaussian_radial_acceleration_arbitrary_precision():
    spec = ProfileSpec.gaussian(3.0, 0.8)
    mp.mp.dps = 50
    n = lambda x: 3 * mp.exp(-x * x) + mp.mpf("0.8")  # noqa: E731
    r, rd, pd = mp.mpf(2), mp.mpf(0), mp.mpf("0.05")
    chi = mp.diff(lambda x: mp.log(n(x)), r)
    expected = r * pd ** 2 + (r * r * pd ** 2 - rd * rd) * chi
    got = rhs_polar(spec, PolarRayState(2.0, 0.0, 0.0, 0.05))[2]
    assert got == pytest.approx(float(expected), rel=1e-13)


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_no_angular_acceleration_without_rotation(spec):
    for r, rd in [(0.3, 0.4), (1.2, -0.7), (4.0, 0.05)]:
        assert rhs_polar(spec, PolarRayState(r, 1.0, rd, 0.0))[3] == 0.0


def test_origin_guard():
    spec = ProfileSpec.gaussian()
    with pytest.raises(SingularityError):
        rhs_polar(spec, PolarRayState(1e-10, 0.0, -1.0, 0.0))
    with pytest.raises(SingularityError):
        rhs_reduced(spec, ReducedRadialState(0.0, -1.0, 0.0))
    with pytest.raises(SingularityError):
        rhs_eikonal(spec, EikonalState(1e-12, 0, 0, 0, -1, 0, 0, 1))


def test_reduced_homogeneous_centrifugal():
    n_c, r0, w = 1.3, 1.5, 0.4
    spec = ProfileSpec.homogeneous(n_c)
    ell = n_c ** 2 * r0 ** 2 * w
    for r in (0.4, 1.5, 3.0, 9.0):
        d = rhs_reduced(spec, ReducedRadialState(r, 0.2, ell))
        assert d[1] == pytest.approx(ell ** 2 / (n_c ** 4 * r ** 3), rel=1e-14)


def test_reduced_matches_polar():
    spec = ProfileSpec.gaussian(3.0, 0.8)
    ell = angular_momentum(spec, LaunchRule().resolve(spec))
    r, rd = 1.5, 0.1
    pd = reduced_phi_rate(spec, r, ell)
    red = rhs_reduced(spec, ReducedRadialState(r, rd, ell))
    pol = rhs_polar(spec, PolarRayState(r, 0.0, rd, pd))
    assert abs(red[1] - pol[2]) <= 1e-10
    assert red[0] == pol[0]


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_circular_radius_is_reduced_root(spec):
    ell = 0.9
    accel = lambda r: rhs_reduced(spec, ReducedRadialState(r, 0.0, ell))[1]  # noqa: E731
    # independent bracket: scan outward for the first + to - change of r''
    rs = np.linspace(0.01, spec.extent, 40_000)
    vals = np.array([accel(r) for r in rs])
    k = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0][0]
    root = brentq(accel, rs[k], rs[k + 1], xtol=1e-15)
    assert circular_radius(spec) == pytest.approx(root, abs=1e-10)
    assert abs(accel(circular_radius(spec))) <= 1e-12


def test_planar_eikonal_stays_planar():
    spec = ProfileSpec.gaussian()
    s = eikonal_from_polar(spec, LaunchRule().resolve(spec))
    assert rhs_eikonal(spec, s)[6] == 0.0
    traj = integrate(Eikonal(spec), s, IntegratorConfig(horizon=30.0))
    assert np.all(traj.states[:, 2] == 0.0) and np.all(traj.states[:, 6] == 0.0)


def test_homogeneous_eikonal_straight_line():
    spec = ProfileSpec.homogeneous(1.2)
    s = eikonal_from_polar(spec, PolarRayState(1.0, 0.0, 0.3, 0.5))
    assert rhs_eikonal(spec, s)[7] == 0.0
    traj = integrate(Eikonal(spec), s, IntegratorConfig(horizon=40.0))
    assert np.ptp(traj.states[:, 7]) == 0.0
    x = traj.states[:, 0] * np.cos(traj.states[:, 1])
    y = traj.states[:, 0] * np.sin(traj.states[:, 1])
    # collinearity with the launch direction
    vx, vy = 0.3, 0.5
    assert np.max(np.abs((x - 1.0) * vy - y * vx)) <= 1e-8
    c = [null_constraint(spec, row) for row in traj.states]
    assert np.max(np.abs(c)) <= 1e-10


def test_angular_momentum_examples():
    spec = ProfileSpec.homogeneous(1.0)
    assert angular_momentum(spec, PolarRayState(3.0, 1.0, 0.4, 0.0)) == 0.0
    assert angular_momentum(spec, PolarRayState(2.0, 0.0, 0.0, 0.1)) == pytest.approx(0.4, rel=1e-15)
    with pytest.raises(ValueError):
        angular_momentum(spec, PolarRayState(-1.0, 0.0, 0.0, 0.1))


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_null_constraint_zero_by_construction(spec):
    for r, rd, pd in [(0.7, 0.1, 0.3), (2.2, -0.4, 0.05)]:
        s = eikonal_from_polar(spec, PolarRayState(r, 0.0, rd, pd))
        assert abs(null_constraint(spec, s)) <= 1e-15 * s.t_dot ** 2


def test_null_constraint_over_twenty_periods(gaussian):
    s = eikonal_from_polar(gaussian, LaunchRule().resolve(gaussian))
    traj = integrate(Eikonal(gaussian), s, IntegratorConfig(horizon=260.0))
    c = np.array([null_constraint(gaussian, row) for row in traj.states])
    assert np.max(np.abs(c)) <= 1e-7


def test_photon_launch_normalisation(gaussian):
    for angle in (0.0, 0.4, -1.2, math.pi / 2):
        s = photon_launch(gaussian, 1.1, angle=angle, speed=1.0)
        n = gaussian.n(1.1)
        assert n * math.hypot(s.r_dot, s.r * s.phi_dot) == pytest.approx(1.0, rel=1e-15)
    s, phi = reduced_from_polar(gaussian, PolarRayState(1.1, 0.3, 0.2, 0.4))
    assert phi == 0.3 and s.ell == angular_momentum(gaussian, PolarRayState(1.1, 0.3, 0.2, 0.4))


# -- invariants --------------------------------------------------------------

def _one_period(spec):
    launch = LaunchRule().resolve(spec)
    return launch, IntegratorConfig(horizon=11.0)


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_cross_formulation_equivalence(spec):
    launch, cfg = _one_period(spec)
    runs = {}
    for name in ("polar", "reduced", "eikonal"):
        rhs, y0 = build_system(spec, launch, name)
        runs[name] = integrate(rhs, y0, cfg)
    ref = runs["polar"]
    for name in ("reduced", "eikonal"):
        view = runs[name].polar_view()
        keep = view["time"] <= ref.params[-1]
        p = ref.interpolate(view["time"][keep])
        for col, key in ((0, "r"), (1, "phi")):
            tol = 10 * cfg.rel_tol * (1.0 + np.abs(p[:, col]))
            assert np.all(np.abs(p[:, col] - view[key][keep]) <= tol), name


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_time_reversal(spec):
    launch, cfg = _one_period(spec)
    fwd = integrate(Polar(spec), launch, cfg).end_state
    back = integrate(Polar(spec), PolarRayState(fwd[0], fwd[1], -fwd[2], -fwd[3]), cfg).end_state
    assert np.allclose(back, [launch.r, launch.phi, -launch.r_dot, -launch.phi_dot], rtol=0, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(-math.pi, math.pi))
def test_rotational_equivariance(dphi):
    spec = ProfileSpec.gaussian()
    launch, cfg = _one_period(spec)
    a = integrate(Polar(spec), launch, cfg)
    b = integrate(Polar(spec), launch._replace(phi=launch.phi + dphi), cfg)
    t = np.linspace(0.0, cfg.horizon, 200)
    ya, yb = a.interpolate(t), b.interpolate(t)
    assert np.max(np.abs(ya[:, 0] - yb[:, 0])) <= 1e-9
    assert np.max(np.abs(ya[:, 1] + dphi - yb[:, 1])) <= 1e-9
    assert np.max(np.abs(ya[:, 2:] - yb[:, 2:])) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 6.0), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_rhs_is_pure(r, rd, pd):
    spec = ProfileSpec.mexican_hat()
    s = PolarRayState(r, 0.5, rd, pd)
    assert np.array_equal(rhs_polar(spec, s), rhs_polar(spec, s))
    # reduced and polar agree wherever phi' follows from ell
    ell = angular_momentum(spec, s)
    red = rhs_reduced(spec, ReducedRadialState(r, rd, ell))
    assert red[1] == pytest.approx(rhs_polar(spec, s)[2], rel=1e-12, abs=1e-12)
