"""Single runs, parameter sweeps and sensitivity probes."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import ClassifyConfig, NotTrappedError, OrbitReport, classify
from .geodesics import Eikonal, Polar, PolarRayState, Reduced, eikonal_from_polar, reduced_from_polar
from .integrator import IntegratorConfig, Trajectory, integrate, standard_events
from .launch import LaunchRule, resolve_launch
from .profiles import ProfileSpec, validate

FORMULATIONS = ("polar", "reduced", "eikonal")
SWEEPABLE = ("n_a", "n_c", "n_d", "sigma", "r_off1", "r_off2")


class SweepConfigError(ValueError):
    pass


@dataclass
class Simulation:
    spec: ProfileSpec
    launch: PolarRayState
    trajectory: Trajectory
    report: OrbitReport


def build_system(spec: ProfileSpec, launch: PolarRayState, formulation: str = "polar",
                 r_floor: float = 1e-9):
    """Right-hand side callable and initial vector for a formulation."""
    if formulation == "polar":
        rhs = Polar(spec, r_floor)
        return rhs, rhs.initial(launch)
    if formulation == "reduced":
        state, phi = reduced_from_polar(spec, launch)
        rhs = Reduced(spec, state.ell, r_floor)
        return rhs, rhs.initial(state, phi)
    if formulation == "eikonal":
        rhs = Eikonal(spec, r_floor)
        return rhs, rhs.initial(eikonal_from_polar(spec, launch))
    raise ValueError(f"unknown formulation {formulation!r} (expected one of {FORMULATIONS})")


def simulate(spec: ProfileSpec, launch, config: IntegratorConfig = IntegratorConfig(),
             classify_config: ClassifyConfig = ClassifyConfig(),
             formulation: str = "polar") -> Simulation:
    state = resolve_launch(spec, launch)
    rhs, y0 = build_system(spec, state, formulation, config.r_floor)
    traj = integrate(rhs, y0, config, events=standard_events(rhs, spec, config))
    return Simulation(spec, state, traj, classify(traj, spec, classify_config))


# -- sweeps --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    base: ProfileSpec
    parameter: str
    values: tuple[float, ...]
    launch: LaunchRule | PolarRayState = LaunchRule()
    integrator: IntegratorConfig = IntegratorConfig()
    classify: ClassifyConfig = ClassifyConfig()
    formulation: str = "polar"
    # when set, n_a is rescaled per row so that n(0) equals this value
    pin_peak: float | None = None

    def profile_for(self, value: float) -> ProfileSpec:
        spec = self.base.with_params(**{self.parameter: float(value)})
        if self.pin_peak is not None:
            spec = spec.with_peak(self.pin_peak)
        return spec

    def check(self) -> list[ProfileSpec]:
        if self.parameter not in SWEEPABLE:
            raise SweepConfigError(f"cannot sweep {self.parameter!r} (expected one of {SWEEPABLE})")
        if len(self.values) == 0:
            raise SweepConfigError("sweep needs at least one value")
        if self.formulation not in FORMULATIONS:
            raise SweepConfigError(f"unknown formulation {self.formulation!r}")
        specs = []
        for v in self.values:
            spec = self.profile_for(v)
            rep = validate(spec)
            if not rep.valid:
                raise SweepConfigError(f"{self.parameter}={v!r}: " + "; ".join(rep.violations))
            specs.append(spec)
        return specs


@dataclass
class SweepRow:
    value: float
    spec: ProfileSpec
    status: str
    report: OrbitReport | None = None
    error: str = ""

    def table_row(self) -> dict:
        rep = self.report
        nan = math.nan
        return {
            "swept_value": self.value,
            "status": self.status,
            "classification": rep.classification.value if rep else "",
            "r_min": rep.r_min if rep else nan,
            "r_max": rep.r_max if rep else nan,
            "width": rep.width if rep else nan,
            "frequency": rep.radial_frequency if rep else nan,
            "termination": rep.termination if rep else "",
            "apsis_pairs": rep.apsis_pairs if rep else 0,
            "n_a": self.spec.n_a,
            "n_c": self.spec.n_c,
            "error": self.error,
        }


SWEEP_COLUMNS = ("swept_value", "status", "classification", "r_min", "r_max", "width", "frequency",
                 "termination", "apsis_pairs", "n_a", "n_c", "error")


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow] = field(default_factory=list)

    def table(self) -> list[dict]:
        return [row.table_row() for row in self.rows]

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.table()])


def _run_row(args):
    value, spec, launch, integ, cls, formulation = args
    try:
        sim = simulate(spec, launch, integ, cls, formulation)
    except Exception as exc:  # recorded in the row, never dropped
        return SweepRow(value, spec, "error", None, f"{type(exc).__name__}: {exc}")
    status = "ok" if sim.trajectory.termination in ("horizon", "escape") else sim.trajectory.termination
    return SweepRow(value, spec, status, sim.report)


def run_sweep(sweep: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every swept value independently; rows come back in sweep order."""
    specs = sweep.check()
    jobs = [(float(v), s, sweep.launch, sweep.integrator, sweep.classify, sweep.formulation)
            for v, s in zip(sweep.values, specs)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_row, jobs))
    else:
        rows = [_run_row(job) for job in jobs]
    return SweepResult(sweep, rows)


# -- sensitivity -------------------------------------------------------------

@dataclass
class PerturbedRun:
    delta: float
    report: OrbitReport
    classification_changed: bool
    d_r_min: float
    d_r_max: float
    d_width: float
    d_frequency: float


@dataclass
class SensitivityReport:
    delta_n: float
    baseline: OrbitReport
    runs: list[PerturbedRun]
    noise_floor: float
    band_tol: float

    @property
    def max_radius_change(self) -> float:
        return max(max(abs(p.d_r_min), abs(p.d_r_max)) for p in self.runs)

    @property
    def classification_changed(self) -> bool:
        return any(p.classification_changed for p in self.runs)

    @property
    def exceeds_band(self) -> bool:
        return self.classification_changed or self.max_radius_change > self.band_tol

    @property
    def measurable(self) -> bool:
        return self.classification_changed or self.max_radius_change > 10.0 * self.noise_floor


def sensitivity_probe(spec: ProfileSpec, launch, delta_n: float,
                      config: IntegratorConfig = IntegratorConfig(),
                      classify_config: ClassifyConfig = ClassifyConfig()) -> SensitivityReport:
    """Re-run a trapped baseline with n_c shifted by -delta_n and +delta_n.

    The launch state is resolved once on the baseline and reused, so only
    the medium changes.  Perturbed profiles are not held to the design
    bounds: they model a disturbed device, not a design.
    """
    base = simulate(spec, launch, config, classify_config)
    if not base.report.trapped:
        raise NotTrappedError(f"baseline is {base.report.classification.value}, not trapped")
    b = base.report
    runs = []
    for sign in (-1.0, 1.0):
        pert = spec.with_params(n_c=spec.n_c + sign * delta_n)
        rep = simulate(pert, base.launch, config, classify_config).report
        runs.append(PerturbedRun(
            delta=sign * delta_n, report=rep,
            classification_changed=rep.classification != b.classification,
            d_r_min=rep.r_min - b.r_min, d_r_max=rep.r_max - b.r_max,
            d_width=rep.width - b.width, d_frequency=rep.radial_frequency - b.radial_frequency,
        ))
    noise = max(b.r_min_spread, b.r_max_spread, classify_config.apsis_noise * spec.sigma)
    return SensitivityReport(delta_n, b, runs, noise, classify_config.band_tol * spec.sigma)
