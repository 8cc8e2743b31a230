"""Ray equations for light in a stationary planar index map.

Three formulations of the same geodesics are provided:

``polar``    (r, phi, r', phi') in the stationary polar reduction,
``reduced``  (r, r', phi) with the conserved angular constant ell = n^2 r^2 phi'
             eliminating the angular equation,
``eikonal``  (r, phi, z, t, and their tau-derivatives) for the full
             space-time metric ds^2 = dt^2/n^2 - dr^2 - r^2 dphi^2 - dz^2.

Units: c = 1, so a ray launched with n |v| = 1 in the polar formulation is
parameterised by coordinate time t.  Angular and axial index gradients are
carried through the general equations but are identically zero for the
radial profiles in :mod:`lightwell.profiles`.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .profiles import ProfileSpec

DEFAULT_R_FLOOR = 1e-9


class SingularityError(ArithmeticError):
    """The ray reached the origin guard r <= r_floor."""


class PolarRayState(NamedTuple):
    r: float
    phi: float
    r_dot: float
    phi_dot: float


class ReducedRadialState(NamedTuple):
    r: float
    r_dot: float
    ell: float


class EikonalState(NamedTuple):
    r: float
    phi: float
    z: float
    t: float
    r_dot: float
    phi_dot: float
    z_dot: float
    t_dot: float


def _guard(r: float, r_floor: float) -> None:
    if not r > r_floor:
        raise SingularityError(f"r = {r!r} at or below the origin guard {r_floor!r}")


def _polar_accel(n, n_r, n_phi, r, rd, pd):
    rdd = (n * r * pd * pd - 2.0 * rd * pd * n_phi - rd * rd * n_r + r * r * pd * pd * n_r) / n
    pdd = -(2.0 * n * r * rd * pd - rd * rd * n_phi + r * r * pd * pd * n_phi
            + 2.0 * r * r * rd * pd * n_r) / (n * r * r)
    return rdd, pdd


def rhs_polar(spec: ProfileSpec, s, r_floor: float = DEFAULT_R_FLOOR) -> np.ndarray:
    """Derivative (r', phi', r'', phi'') of a polar ray state."""
    r, _, rd, pd = (float(v) for v in s)
    _guard(r, r_floor)
    n, n_r, _ = spec.derivs(r)
    rdd, pdd = _polar_accel(n, n_r, 0.0, r, rd, pd)
    return np.array([rd, pd, rdd, pdd])


def reduced_phi_rate(spec: ProfileSpec, r: float, ell: float) -> float:
    """phi' = ell / (n^2 r^2)."""
    n = spec.n(r)
    return ell / (n * n * r * r)


def rhs_reduced(spec: ProfileSpec, s, r_floor: float = DEFAULT_R_FLOOR) -> np.ndarray:
    """Derivative (r', r'') of the reduced radial system; ``s`` is (r, r_dot, ell)."""
    r, rd, ell = (float(v) for v in s)
    _guard(r, r_floor)
    n, n_r, _ = spec.derivs(r)
    rdd = _reduced_accel(n, n_r, r, rd, ell)
    return np.array([rd, rdd])


def _reduced_accel(n, n_r, r, rd, ell):
    chi = n_r / n
    k = ell * ell / (n ** 4 * r ** 4)
    return (k * r * r - rd * rd) * chi + k * r


def _eikonal_accel(n, n_r, n_phi, n_z, n_t, r, rd, pd, zd, td):
    n3 = n * n * n
    rdd = r * pd * pd + td * td * n_r / n3
    pdd = (-2.0 * r * rd * pd + td * td * n_phi / n3) / (r * r)
    # printed with a phi'' label; the right side is the axial equation
    zdd = td * td * n_z / n3
    tdd = td * (td * n_t + 2.0 * (zd * n_z + pd * n_phi + rd * n_r)) / n
    return rdd, pdd, zdd, tdd


def rhs_eikonal(spec: ProfileSpec, s, r_floor: float = DEFAULT_R_FLOOR) -> np.ndarray:
    """Derivative of an eikonal state with respect to the affine parameter."""
    r, _, _, _, rd, pd, zd, td = (float(v) for v in s)
    _guard(r, r_floor)
    n, n_r, _ = spec.derivs(r)
    rdd, pdd, zdd, tdd = _eikonal_accel(n, n_r, 0.0, 0.0, 0.0, r, rd, pd, zd, td)
    return np.array([rd, pd, zd, td, rdd, pdd, zdd, tdd])


def angular_momentum(spec: ProfileSpec, s) -> float:
    """ell = n(r)^2 r^2 phi' for a polar state."""
    r, _, _, pd = (float(v) for v in s)
    if not r >= 0.0:
        raise ValueError(f"radius must be >= 0, got {r!r}")
    n = spec.n(r)
    return n * n * r * r * pd


def null_constraint(spec: ProfileSpec, s) -> float:
    """C = t'^2/n^2 - r'^2 - r^2 phi'^2 - z'^2 (zero for light)."""
    r, _, _, _, rd, pd, zd, td = (float(v) for v in s)
    n = spec.n(r)
    return td * td / (n * n) - rd * rd - r * r * pd * pd - zd * zd


# -- launch conversions --------------------------------------------------------

def photon_launch(spec: ProfileSpec, r: float, phi: float = 0.0, angle: float = 0.0,
                  speed: float = 1.0) -> PolarRayState:
    """Polar state with n|v| = speed; ``angle`` is measured from the tangential
    direction (0 = purely azimuthal, +pi/2 = radially outward)."""
    v = speed / spec.n(r)
    return PolarRayState(r, phi, v * math.sin(angle), v * math.cos(angle) / r)


def eikonal_from_polar(spec: ProfileSpec, s, t0: float = 0.0) -> EikonalState:
    """Planar eikonal launch with t' chosen so that the null constraint is zero."""
    r, phi, rd, pd = (float(v) for v in s)
    td = spec.n(r) * math.sqrt(rd * rd + r * r * pd * pd)
    return EikonalState(r, phi, 0.0, t0, rd, pd, 0.0, td)


def reduced_from_polar(spec: ProfileSpec, s) -> tuple[ReducedRadialState, float]:
    """Split a polar state into the reduced state and the launch angle phi."""
    r, phi, rd, pd = (float(v) for v in s)
    return ReducedRadialState(r, rd, angular_momentum(spec, s)), phi


# -- formulations: callables usable by the integrator ------------------------

class Polar:
    """Polar formulation; state layout (r, phi, r_dot, phi_dot)."""

    name = "polar"
    r_index = 0
    rdot_index = 2

    def __init__(self, spec: ProfileSpec, r_floor: float = DEFAULT_R_FLOOR):
        self.spec = spec
        self.r_floor = r_floor

    def __call__(self, t, y):
        r, _, rd, pd = y.tolist()
        if not r > self.r_floor:
            _guard(r, self.r_floor)
        n, n_r, _ = self.spec.derivs(r)
        rdd, pdd = _polar_accel(n, n_r, 0.0, r, rd, pd)
        return np.array((rd, pd, rdd, pdd))

    def initial(self, s) -> np.ndarray:
        return np.array([float(v) for v in s])

    def polar_view(self, params, states) -> dict:
        states = np.atleast_2d(states)
        return {"time": np.asarray(params, dtype=float), "r": states[:, 0], "phi": states[:, 1],
                "r_dot": states[:, 2], "phi_dot": states[:, 3]}


class Reduced:
    """Reduced radial formulation with fixed ell; layout (r, r_dot, phi)."""

    name = "reduced"
    r_index = 0
    rdot_index = 1

    def __init__(self, spec: ProfileSpec, ell: float, r_floor: float = DEFAULT_R_FLOOR):
        self.spec = spec
        self.ell = float(ell)
        self.r_floor = r_floor

    def __call__(self, t, y):
        r, rd, _ = y.tolist()
        if not r > self.r_floor:
            _guard(r, self.r_floor)
        n, n_r, _ = self.spec.derivs(r)
        ell = self.ell
        return np.array((rd, _reduced_accel(n, n_r, r, rd, ell), ell / (n * n * r * r)))

    def initial(self, s, phi: float = 0.0) -> np.ndarray:
        r, rd = float(s[0]), float(s[1])
        return np.array([r, rd, phi])

    def polar_view(self, params, states) -> dict:
        states = np.atleast_2d(states)
        r = states[:, 0]
        n = np.array([self.spec.n(float(x)) for x in r])
        return {"time": np.asarray(params, dtype=float), "r": r, "phi": states[:, 2],
                "r_dot": states[:, 1], "phi_dot": self.ell / (n * n * r * r)}


class Eikonal:
    """Full space-time formulation; layout (r, phi, z, t, r', phi', z', t')."""

    name = "eikonal"
    r_index = 0
    rdot_index = 4

    def __init__(self, spec: ProfileSpec, r_floor: float = DEFAULT_R_FLOOR):
        self.spec = spec
        self.r_floor = r_floor

    def __call__(self, tau, y):
        r, _, _, _, rd, pd, zd, td = y.tolist()
        if not r > self.r_floor:
            _guard(r, self.r_floor)
        n, n_r, _ = self.spec.derivs(r)
        rdd, pdd, zdd, tdd = _eikonal_accel(n, n_r, 0.0, 0.0, 0.0, r, rd, pd, zd, td)
        return np.array((rd, pd, zd, td, rdd, pdd, zdd, tdd))

    def initial(self, s) -> np.ndarray:
        return np.array([float(v) for v in s])

    def polar_view(self, params, states) -> dict:
        """Reparameterise by coordinate time t (derivatives become d/dt)."""
        states = np.atleast_2d(states)
        td = states[:, 7]
        return {"time": states[:, 3], "r": states[:, 0], "phi": states[:, 1],
                "r_dot": states[:, 4] / td, "phi_dot": states[:, 5] / td,
                "tau": np.asarray(params, dtype=float)}
