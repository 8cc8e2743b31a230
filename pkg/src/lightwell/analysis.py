"""Stability theory and orbit classification for trapped rays.

* energy_supply_ratio: E_t = r' (ell^2/(n^4 r^2) - r'^2) chi(r)
* linearize: perturbations (delta, eps) around (r0, kappa0) obey
  [delta', eps'] = [[0, 1], [W, 2V]] [delta, eps] with V = -kappa0 chi0 and
  W = 2 chi0 beta^2 r0 + chi0' (r0^2 beta^2 - kappa0^2)
* classify: trapping premises evaluated over a finite observation window
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .integrator import ESCAPE, HORIZON, SINGULARITY, Trajectory, detect_apsides
from .profiles import ProfileKind, ProfileSpec


def energy_supply_ratio(spec: ProfileSpec, r: float, r_dot: float, ell: float) -> float:
    """Ratio of external energy supply at a phase-space point."""
    n = spec.n(r)
    return r_dot * (ell * ell / (n ** 4 * r * r) - r_dot * r_dot) * spec.chi(r)


def critical_radius(spec: ProfileSpec, chi_tol: float = 1e-6) -> float:
    """Smallest radius x_c such that |chi(r)| < chi_tol for every r >= x_c."""
    if spec.kind is ProfileKind.HOMOGENEOUS:
        return 0.0
    far = spec.extent + 50.0 * spec.sigma
    rs = np.linspace(0.0, far, 20_001)
    mag = np.array([abs(spec.chi(float(r))) for r in rs])
    above = np.nonzero(mag >= chi_tol)[0]
    if len(above) == 0:
        return 0.0
    j = above[-1]
    if j == len(rs) - 1:
        raise ValueError("chi does not decay below tolerance inside the scanned range")
    return brentq(lambda r: abs(spec.chi(r)) - chi_tol, rs[j], rs[j + 1], xtol=1e-14)


@dataclass
class EnergyField:
    r: np.ndarray
    r_dot: np.ndarray
    values: np.ndarray  # shape (len(r_dot), len(r))
    ell: float
    critical_radius: float

    def rows(self):
        """Long-format (r, r_dot, E_t) records."""
        for i, rd in enumerate(self.r_dot):
            for j, r in enumerate(self.r):
                yield float(r), float(rd), float(self.values[i, j])


def energy_ratio_field(spec: ProfileSpec, r_grid, r_dot_grid, ell: float,
                       chi_tol: float | None = None) -> EnergyField:
    r_grid = np.asarray(r_grid, dtype=float)
    rd = np.asarray(r_dot_grid, dtype=float)[:, None]
    if np.any(r_grid <= 0.0) or not np.all(np.isfinite(r_grid)) or not np.all(np.isfinite(rd)):
        raise ValueError("energy field grids must be finite with r > 0")
    if chi_tol is None:
        chi_tol = 1e-6 / spec.sigma
    n = np.array([spec.n(float(r)) for r in r_grid])
    chi = np.array([spec.chi(float(r)) for r in r_grid])
    values = rd * (ell * ell / (n ** 4 * r_grid ** 2) - rd * rd) * chi
    return EnergyField(r_grid, rd[:, 0], values, float(ell), critical_radius(spec, chi_tol))


# -- linear stability ----------------------------------------------------------

@dataclass
class StabilityReport:
    r0: float
    kappa0: float
    beta: float
    V: float
    W: float
    lambda1: complex
    lambda2: complex
    lyapunov_stable: bool
    # the two conditions of the stability criterion; each must be <= 0
    gradient_condition: float
    discriminant: float

    @property
    def conditions_met(self) -> bool:
        return self.gradient_condition <= 0.0 and self.discriminant <= 0.0

    @property
    def max_real(self) -> float:
        return max(self.lambda1.real, self.lambda2.real)


def linearize(spec: ProfileSpec, r0: float, kappa0: float, beta: float) -> StabilityReport:
    if not r0 > 0.0:
        raise ValueError(f"r0 must be > 0, got {r0!r}")
    chi0 = spec.chi(r0)
    dchi0 = spec.chi_prime(r0)
    V = -kappa0 * chi0
    W = 2.0 * chi0 * beta * beta * r0 + dchi0 * (r0 * r0 * beta * beta - kappa0 * kappa0)
    disc = V * V + W
    root = cmath.sqrt(complex(disc, 0.0))
    lam1, lam2 = V + root, V - root
    return StabilityReport(
        r0=r0, kappa0=kappa0, beta=beta, V=V, W=W, lambda1=lam1, lambda2=lam2,
        lyapunov_stable=max(lam1.real, lam2.real) <= 0.0,
        gradient_condition=-dchi0 * kappa0, discriminant=disc,
    )


# -- classification ------------------------------------------------------------

class OrbitClass(str, enum.Enum):
    TRAPPED_OPEN = "TrappedOpenOrbit"
    CIRCULAR = "CircularOrbit"
    ESCAPE = "Escape"
    FELL_TO_FLOOR = "FellToFloor"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class ClassifyConfig:
    n_min: int = 10            # apside pairs needed to call an orbit trapped
    band_tol: float = 1e-3     # allowed spread of successive extrema (x sigma)
    circ_tol: float = 1e-4     # radial excursion of a circular orbit (x sigma)
    apsis_noise: float = 1e-9  # turning points closer than this are jitter (x sigma)

    def to_dict(self) -> dict:
        return {"n_min": self.n_min, "band_tol": self.band_tol,
                "circ_tol": self.circ_tol, "apsis_noise": self.apsis_noise}


@dataclass
class OrbitReport:
    classification: OrbitClass
    r_min: float
    r_max: float
    width: float
    radial_frequency: float
    ell_drift: float
    premise: int | None
    horizon: float
    termination: str
    apsis_pairs: int = 0
    r_min_spread: float = math.nan
    r_max_spread: float = math.nan
    phi_dot_min: float = math.nan
    phi_dot_max: float = math.nan
    ell: float = math.nan
    r_min_apsides: list[float] = field(default_factory=list, repr=False)

    @property
    def trapped(self) -> bool:
        return self.classification is OrbitClass.TRAPPED_OPEN

    def to_dict(self) -> dict:
        return {
            "classification": self.classification.value,
            "premise": self.premise,
            "termination": self.termination,
            "horizon": self.horizon,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "width": self.width,
            "radial_frequency": self.radial_frequency,
            "apsis_pairs": self.apsis_pairs,
            "r_min_spread": self.r_min_spread,
            "r_max_spread": self.r_max_spread,
            "phi_dot_min": self.phi_dot_min,
            "phi_dot_max": self.phi_dot_max,
            "ell": self.ell,
            "ell_drift": self.ell_drift,
        }


def _ell_series(spec: ProfileSpec, view: dict) -> np.ndarray:
    n = np.array([spec.n(float(r)) for r in view["r"]])
    return n * n * view["r"] ** 2 * view["phi_dot"]


def relative_drift(series: np.ndarray) -> float:
    ref = series[0]
    dev = float(np.max(np.abs(series - ref)))
    return dev / abs(ref) if ref != 0.0 else dev


def classify(traj: Trajectory, spec: ProfileSpec, config: ClassifyConfig = ClassifyConfig()) -> OrbitReport:
    """Label a finished trajectory with the trapping premise it satisfies.

    Premises 2 and 3 (vanishing r' or phi' with the other coordinate
    bounded) cannot occur for a stationary radial index, so only premise 4
    or a circular orbit can be reported.  A run that is neither trapped,
    circular, escaped, nor singular is ``Undetermined``: the horizon was too
    short to decide.
    """
    sigma = spec.sigma
    view = traj.polar_view()
    r = view["r"]
    phi_dot = view["phi_dot"]
    ell = _ell_series(spec, view)
    span = float(view["time"][-1] - view["time"][0])
    apsides = detect_apsides(traj, noise=config.apsis_noise * sigma)
    mins = [a for a in apsides if a.label == "min"]
    maxs = [a for a in apsides if a.label == "max"]
    r_mins = np.array([a.r for a in mins])
    r_maxs = np.array([a.r for a in maxs])

    r_min = float(r_mins.mean()) if len(r_mins) else float(r.min())
    r_max = float(r_maxs.mean()) if len(r_maxs) else float(r.max())
    freq = math.nan
    if len(mins) >= 2:
        times = np.array([a.time for a in mins])
        freq = 1.0 / float(np.mean(np.diff(times)))
    report = OrbitReport(
        classification=OrbitClass.UNDETERMINED,
        r_min=r_min, r_max=r_max, width=r_max - r_min, radial_frequency=freq,
        ell_drift=relative_drift(ell), premise=None, horizon=span,
        termination=traj.termination, apsis_pairs=min(len(mins), len(maxs)),
        r_min_spread=float(np.ptp(r_mins)) if len(r_mins) else math.nan,
        r_max_spread=float(np.ptp(r_maxs)) if len(r_maxs) else math.nan,
        phi_dot_min=float(phi_dot.min()), phi_dot_max=float(phi_dot.max()),
        ell=float(ell[0]), r_min_apsides=[float(x) for x in r_mins],
    )

    if traj.termination == SINGULARITY:
        report.classification = OrbitClass.FELL_TO_FLOOR
        return report
    if traj.termination == ESCAPE:
        report.classification = OrbitClass.ESCAPE
        return report
    if traj.termination != HORIZON:
        return report

    mean_r = float(r.mean())
    if float(np.max(np.abs(r - mean_r))) <= config.circ_tol * sigma:
        report.classification = OrbitClass.CIRCULAR
        report.premise = 4
        report.r_min, report.r_max = float(r.min()), float(r.max())
        report.width = report.r_max - report.r_min
        return report

    band = config.band_tol * sigma
    if (report.apsis_pairs >= config.n_min
            and report.r_min_spread <= band and report.r_max_spread <= band
            and np.all(np.isfinite(phi_dot))):
        report.classification = OrbitClass.TRAPPED_OPEN
        report.premise = 4
    return report


class NotTrappedError(ValueError):
    pass


@dataclass
class ComparisonReport:
    width_change: float      # (B - A) / A
    frequency_change: float  # (B - A) / A
    width_a: float
    width_b: float
    frequency_a: float
    frequency_b: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def compare_profiles(a: OrbitReport, b: OrbitReport) -> ComparisonReport:
    """Signed relative change of orbit width and radial frequency from A to B."""
    for label, rep in (("A", a), ("B", b)):
        if not rep.trapped:
            raise NotTrappedError(f"report {label} is {rep.classification.value}, not trapped")
    return ComparisonReport(
        width_change=(b.width - a.width) / a.width,
        frequency_change=(b.radial_frequency - a.radial_frequency) / a.radial_frequency,
        width_a=a.width, width_b=b.width,
        frequency_a=a.radial_frequency, frequency_b=b.radial_frequency,
    )
