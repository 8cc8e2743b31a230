"""Light geodesics in stationary centro-symmetric refractive-index maps."""

__version__ = "0.1.0"

from .analysis import (ClassifyConfig, OrbitClass, OrbitReport, classify, compare_profiles,
                       critical_radius, energy_ratio_field, energy_supply_ratio, linearize)
from .geodesics import (EikonalState, PolarRayState, ReducedRadialState, angular_momentum,
                        null_constraint, rhs_eikonal, rhs_polar, rhs_reduced)
from .integrator import IntegratorConfig, Trajectory, detect_apsides, integrate
from .launch import LaunchRule, circular_radius, ledge_radius
from .profiles import ProfileKind, ProfileSpec, validate
from .sweep import SweepSpec, run_sweep, sensitivity_probe, simulate

__all__ = [
    "ClassifyConfig", "EikonalState", "IntegratorConfig", "LaunchRule", "OrbitClass", "OrbitReport",
    "PolarRayState", "ProfileKind", "ProfileSpec", "ReducedRadialState", "SweepSpec", "Trajectory",
    "angular_momentum", "circular_radius", "classify", "compare_profiles", "critical_radius",
    "detect_apsides", "energy_ratio_field", "energy_supply_ratio", "integrate", "ledge_radius",
    "linearize", "null_constraint", "rhs_eikonal", "rhs_polar", "rhs_reduced", "run_sweep",
    "sensitivity_probe", "simulate", "validate",
]
