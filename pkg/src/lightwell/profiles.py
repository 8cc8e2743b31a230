"""Centro-symmetric refractive-index profiles.

Every profile is a closed form n(r) on r >= 0 with analytic first and second
radial derivatives.  Lengths are in units of ``sigma`` unless a different
``sigma`` is given explicitly.

Families
--------
* Gaussian:        n = n_a exp(-r^2/s^2) + n_c
* MexicanHat:      n = (n_a - n_d r^2/s^2) exp(-r^2/s^2) + n_c
* DoubleGaussian:  n = n_a (exp(-(r-r1)^2/s^2) + exp(-(r-r2)^2/s^2)) + n_c
* Homogeneous:     n = n_c
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_BOUNDS = (0.8, 3.8)
# absolute slack on the admissible index range; the Mexican hat undershoots
# n_c by ~1e-8 near r = 4 sigma and the default double attractor peaks at
# 3.8 + 3e-7
BOUNDS_TOL = 1e-6


class DomainError(ValueError):
    """Raised when a profile is evaluated outside r >= 0."""


class ProfileKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    MEXICAN_HAT = "mexican_hat"
    DOUBLE_GAUSSIAN = "double_gaussian"
    HOMOGENEOUS = "homogeneous"

    @classmethod
    def parse(cls, name: str) -> "ProfileKind":
        key = name.strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"mexicanhat": "mexican_hat", "doublegaussian": "double_gaussian"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown profile kind {name!r} (expected one of: {choices})") from None


def _check_r(r: float) -> float:
    if not r >= 0.0:  # also catches NaN
        raise DomainError(f"radius must be finite and >= 0, got {r!r}")
    return r


@dataclass(frozen=True)
class ProfileSpec:
    """Parametric refractive-index map n(r).

    Immutable; safe to share between concurrent evaluators.
    """

    kind: ProfileKind = ProfileKind.GAUSSIAN
    n_a: float = 3.0
    n_c: float = 0.8
    n_d: float = 0.0
    sigma: float = 1.0
    r_off1: float = 0.0
    r_off2: float = 4.0
    bounds: tuple[float, float] = DEFAULT_BOUNDS

    def __post_init__(self):
        if not isinstance(self.kind, ProfileKind):
            object.__setattr__(self, "kind", ProfileKind.parse(str(self.kind)))
        object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))

    # -- construction helpers ------------------------------------------------

    @classmethod
    def gaussian(cls, n_a=3.0, n_c=0.8, sigma=1.0, bounds=DEFAULT_BOUNDS):
        return cls(ProfileKind.GAUSSIAN, n_a=n_a, n_c=n_c, sigma=sigma, bounds=bounds)

    @classmethod
    def mexican_hat(cls, n_a=3.0, n_c=0.8, n_d=0.2, sigma=1.0, bounds=DEFAULT_BOUNDS):
        return cls(ProfileKind.MEXICAN_HAT, n_a=n_a, n_c=n_c, n_d=n_d, sigma=sigma, bounds=bounds)

    @classmethod
    def double_gaussian(cls, n_a=2.7, n_c=1.1, r_off1=0.0, r_off2=4.0, sigma=1.0,
                        bounds=DEFAULT_BOUNDS):
        return cls(ProfileKind.DOUBLE_GAUSSIAN, n_a=n_a, n_c=n_c, r_off1=r_off1,
                   r_off2=r_off2, sigma=sigma, bounds=bounds)

    @classmethod
    def homogeneous(cls, n_c=1.0, bounds=DEFAULT_BOUNDS):
        return cls(ProfileKind.HOMOGENEOUS, n_a=0.0, n_c=n_c, bounds=bounds)

    def with_params(self, **changes) -> "ProfileSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n_a": self.n_a,
            "n_c": self.n_c,
            "n_d": self.n_d,
            "sigma": self.sigma,
            "r_off1": self.r_off1,
            "r_off2": self.r_off2,
            "bounds": list(self.bounds),
        }

    # -- evaluation ----------------------------------------------------------

    def derivs(self, r: float) -> tuple[float, float, float]:
        """Return (n, dn/dr, d2n/dr2) at radius ``r``."""
        _check_r(r)
        kind = self.kind
        s2 = self.sigma * self.sigma
        if kind is ProfileKind.GAUSSIAN:
            e = self.n_a * math.exp(-r * r / s2)
            return (e + self.n_c,
                    -2.0 * r / s2 * e,
                    e * (4.0 * r * r / (s2 * s2) - 2.0 / s2))
        if kind is ProfileKind.MEXICAN_HAT:
            # n = g(u) + n_c with u = r^2/s^2
            u = r * r / s2
            e = math.exp(-u)
            a, d = self.n_a, self.n_d
            g = (a - d * u) * e
            g_u = (d * u - a - d) * e
            g_uu = (2.0 * d + a - d * u) * e
            du = 2.0 * r / s2
            return g + self.n_c, g_u * du, g_uu * du * du + g_u * 2.0 / s2
        if kind is ProfileKind.DOUBLE_GAUSSIAN:
            n, d1, d2 = self.n_c, 0.0, 0.0
            for off in (self.r_off1, self.r_off2):
                x = r - off
                e = self.n_a * math.exp(-x * x / s2)
                n += e
                d1 += -2.0 * x / s2 * e
                d2 += e * (4.0 * x * x / (s2 * s2) - 2.0 / s2)
            return n, d1, d2
        return self.n_c, 0.0, 0.0

    def n(self, r: float) -> float:
        return self.derivs(r)[0]

    def dn(self, r: float) -> float:
        return self.derivs(r)[1]

    def d2n(self, r: float) -> float:
        return self.derivs(r)[2]

    def chi(self, r: float) -> float:
        """Logarithmic derivative d(ln n)/dr."""
        n, d1, _ = self.derivs(r)
        return d1 / n

    def chi_prime(self, r: float) -> float:
        n, d1, d2 = self.derivs(r)
        q = d1 / n
        return d2 / n - q * q

    def unit_shape_at_origin(self) -> float:
        """(n(0) - n_c) / n_a, i.e. the amplitude factor multiplying n_a at r = 0."""
        if self.kind is ProfileKind.HOMOGENEOUS:
            return 0.0
        unit = replace(self, n_a=1.0, n_c=0.0)
        return unit.n(0.0)

    def with_peak(self, peak: float) -> "ProfileSpec":
        """Rescale ``n_a`` so that n(0) == peak for the current ``n_c``."""
        s0 = self.unit_shape_at_origin()
        if s0 == 0.0:
            raise ValueError(f"{self.kind.value} profile has no amplitude to pin")
        return replace(self, n_a=(peak - self.n_c) / s0)

    @property
    def extent(self) -> float:
        """Radius beyond which the profile is effectively flat (used for grids)."""
        far = 10.0 * self.sigma
        if self.kind is ProfileKind.DOUBLE_GAUSSIAN:
            far += max(abs(self.r_off1), abs(self.r_off2))
        return far


def evaluate(spec: ProfileSpec, r: float) -> float:
    return spec.n(r)


def grad(spec: ProfileSpec, r: float) -> float:
    return spec.dn(r)


def grad2(spec: ProfileSpec, r: float) -> float:
    return spec.d2n(r)


def chi(spec: ProfileSpec, r: float) -> float:
    return spec.chi(r)


def chi_prime(spec: ProfileSpec, r: float) -> float:
    return spec.chi_prime(r)


@dataclass
class ValidationReport:
    valid: bool
    violations: list[str] = field(default_factory=list)
    n_min: float = math.nan
    n_max: float = math.nan
    r_at_n_max: float = math.nan
    max_abs_grad: float = math.nan
    # first interval on the grid where n is non-increasing, starting at the
    # profile's interior maximum
    decreasing_region: tuple[float, float] = (math.nan, math.nan)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": list(self.violations),
            "n_min": self.n_min,
            "n_max": self.n_max,
            "r_at_n_max": self.r_at_n_max,
            "max_abs_grad": self.max_abs_grad,
            "decreasing_region": list(self.decreasing_region),
        }


def validate(spec: ProfileSpec, points: int = 10_000, check_bounds: bool = True) -> ValidationReport:
    """Check a profile against its admissible index range and smoothness.

    Scans r in [0, 10 sigma] (plus the lobe offsets for the double attractor).
    Never raises; problems are collected in ``violations``.
    """
    violations = []
    numeric = {k: getattr(spec, k) for k in ("n_a", "n_c", "n_d", "sigma", "r_off1", "r_off2")}
    for key, value in numeric.items():
        if not math.isfinite(value):
            violations.append(f"{key} must be finite (got {value!r})")
    if not spec.sigma > 0.0:
        violations.append(f"sigma must be > 0 (got {spec.sigma!r})")
    lo, hi = spec.bounds
    if not lo < hi:
        violations.append(f"bounds must satisfy lo < hi (got {spec.bounds!r})")
    if violations:
        return ValidationReport(valid=False, violations=violations)

    rs = np.linspace(0.0, spec.extent, points)
    table = np.array([spec.derivs(float(r)) for r in rs])
    n, d1, d2 = table.T
    if not (np.all(np.isfinite(n)) and np.all(np.isfinite(d1)) and np.all(np.isfinite(d2))):
        violations.append("profile or its derivatives are not finite on the grid")
    if np.any(n <= 0.0):
        violations.append("refractive index must stay positive")

    i_max = int(np.argmax(n))
    if check_bounds:
        i_min = int(np.argmin(n))
        if n[i_max] > hi + BOUNDS_TOL:
            violations.append(f"n = {n[i_max]:.6g} exceeds upper bound {hi} at r = {rs[i_max]:.6g}")
        if n[i_min] < lo - BOUNDS_TOL:
            violations.append(f"n = {n[i_min]:.6g} below lower bound {lo} at r = {rs[i_min]:.6g}")

    # non-increasing run starting at the interior maximum
    slack = 1e-12 * max(1.0, float(np.max(np.abs(d1))))
    # the true peak can sit just past the grid maximum, still on the rising slope
    start = i_max + 1 if d1[i_max] > slack and i_max + 1 < len(rs) else i_max
    j = start
    while j + 1 < len(rs) and d1[j + 1] <= slack:
        j += 1
    return ValidationReport(
        valid=not violations,
        violations=violations,
        n_min=float(n.min()),
        n_max=float(n[i_max]),
        r_at_n_max=float(rs[i_max]),
        max_abs_grad=float(np.max(np.abs(d1))),
        decreasing_region=(float(rs[start]), float(rs[j])),
    )
