"""Reproducible launch states derived from the profile itself.

With r' = 0 the radial acceleration is phi'^2 r (1 + r chi(r)), so circular
orbits sit where r chi(r) = -1 regardless of the angular rate, and the
speed of a ray only rescales its time axis.  A launch is therefore fixed by
its radius; the rate is set by the photon normalisation n |v| = speed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geodesics import PolarRayState, photon_launch
from .profiles import ProfileSpec

ANCHORS = ("ledge", "circular")


class LaunchError(ValueError):
    pass


def _grid(spec: ProfileSpec, points: int = 10_000) -> np.ndarray:
    return np.linspace(spec.extent / points, spec.extent, points)


def ledge_radius(spec: ProfileSpec) -> float:
    """Radius maximising r |chi(r)|, the steepest part of the index ledge."""
    rs = _grid(spec)
    vals = np.array([r * abs(spec.chi(float(r))) for r in rs])
    j = int(np.argmax(vals))
    if vals[j] == 0.0:
        raise LaunchError(f"{spec.kind.value} profile has no index gradient to launch against")
    lo, hi = rs[max(j - 1, 0)], rs[min(j + 1, len(rs) - 1)]
    res = minimize_scalar(lambda r: -r * abs(spec.chi(r)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x) if -res.fun >= vals[j] else float(rs[j])


def circular_radius(spec: ProfileSpec) -> float:
    """Innermost stable circular-orbit radius: 1 + r chi(r) crosses zero downward."""
    rs = _grid(spec)
    f = np.array([1.0 + r * spec.chi(float(r)) for r in rs])
    down = np.nonzero((f[:-1] > 0.0) & (f[1:] <= 0.0))[0]
    if len(down) == 0:
        raise LaunchError(f"{spec.kind.value} profile supports no circular orbit")
    j = down[0]
    if f[j + 1] == 0.0:
        return float(rs[j + 1])
    return brentq(lambda r: 1.0 + r * spec.chi(r), rs[j], rs[j + 1], xtol=1e-15, rtol=1e-15)


@dataclass(frozen=True)
class LaunchRule:
    """r0 = anchor radius + offset * sigma, r' = 0, n |v| = speed."""

    anchor: str = "ledge"
    offset: float = 0.0
    speed: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if self.anchor not in ANCHORS:
            raise ValueError(f"unknown launch anchor {self.anchor!r} (expected one of {ANCHORS})")
        if not self.speed > 0:
            raise ValueError(f"speed must be > 0 (got {self.speed!r})")

    def radius(self, spec: ProfileSpec) -> float:
        base = ledge_radius(spec) if self.anchor == "ledge" else circular_radius(spec)
        r0 = base + self.offset * spec.sigma
        if not r0 > 0:
            raise LaunchError(f"launch radius {r0!r} is not positive")
        return r0

    def resolve(self, spec: ProfileSpec) -> PolarRayState:
        return photon_launch(spec, self.radius(spec), phi=self.phi, speed=self.speed)

    def to_dict(self) -> dict:
        return {"rule": self.anchor, "offset": self.offset, "speed": self.speed, "phi": self.phi}


def resolve_launch(spec: ProfileSpec, launch) -> PolarRayState:
    """Accept a LaunchRule or an explicit (r, phi, r_dot, phi_dot) state."""
    if isinstance(launch, LaunchRule):
        return launch.resolve(spec)
    return PolarRayState(*(float(v) for v in launch))
