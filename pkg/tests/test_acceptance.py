"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line with the measured numbers; the
lines are repeated in the pytest terminal summary.
"""
import numpy as np
import pytest
from scipy.stats import spearmanr

from lightwell import LaunchRule, ProfileSpec, simulate
from lightwell.analysis import compare_profiles, energy_ratio_field, linearize
from lightwell.geodesics import null_constraint
from lightwell.integrator import IntegratorConfig, integrate, rk4_fixed
from lightwell.output import fmt
from lightwell.sweep import SweepSpec, build_system, run_sweep, sensitivity_probe

from conftest import DESIGN_PAIRS, WIDE, gaussian_pair, record

LONG = IntegratorConfig(horizon=250.0)


def verdict(number, title, ok, detail):
    record(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def trend():
    base = ProfileSpec.gaussian(bounds=WIDE)
    values = tuple(np.linspace(0.5, 1.1, 13))
    return SweepSpec(base, "n_c", values, integrator=LONG, pin_peak=3.8)


@pytest.fixture(scope="module")
def trend_serial(trend):
    return run_sweep(trend, workers=1)


def test_01_conservation():
    specs = [gaussian_pair(a, c) for a, c in DESIGN_PAIRS]
    specs += [ProfileSpec.mexican_hat(), ProfileSpec.double_gaussian()]
    worst, fewest = 0.0, np.inf
    for spec in specs:
        probe = simulate(spec, LaunchRule(), IntegratorConfig(horizon=60.0)).report
        horizon = 21.0 / probe.radial_frequency
        rep = simulate(spec, LaunchRule(), IntegratorConfig(horizon=horizon)).report
        worst = max(worst, rep.ell_drift)
        fewest = min(fewest, rep.apsis_pairs)
    ok = worst <= 1e-8 and fewest >= 20
    verdict(1, "angular momentum conservation", ok,
            f"max relative drift {worst:.2e} (<= 1e-8) over >= {fewest} radial periods, {len(specs)} profiles")


def test_02_eikonal_consistency(gaussian):
    launch = LaunchRule().resolve(gaussian)
    probe = simulate(gaussian, launch, IntegratorConfig(horizon=60.0)).report
    cfg = IntegratorConfig(horizon=1.0 / probe.radial_frequency)
    prhs, py0 = build_system(gaussian, launch, "polar")
    erhs, ey0 = build_system(gaussian, launch, "eikonal")
    polar = integrate(prhs, py0, cfg)
    eik = integrate(erhs, ey0, cfg)
    view = eik.polar_view()
    keep = view["time"] <= polar.params[-1]
    ref = polar.interpolate(view["time"][keep])
    dev = max(np.max(np.abs(ref[:, i] - view[k][keep]))
              for i, k in enumerate(("r", "phi", "r_dot", "phi_dot")))
    null = max(abs(null_constraint(gaussian, s)) for s in eik.states)
    ok = dev <= 1e-6 and null <= 1e-7
    verdict(2, "eikonal vs polar", ok,
            f"max pointwise deviation {dev:.2e} (<= 1e-6) over one period, null residual {null:.2e} (<= 1e-7)")


def test_03_trapping_reproduction():
    parts, ok = [], True
    for n_a, n_c in DESIGN_PAIRS:
        spec = gaussian_pair(n_a, n_c)
        rep = simulate(spec, LaunchRule(), LONG).report
        spread = max(rep.r_min_spread, rep.r_max_spread)
        good = rep.trapped and rep.apsis_pairs >= 10 and spread <= 1e-3 * spec.sigma
        ok &= good
        parts.append(f"{n_a}/{n_c}: {rep.classification.value} pairs={rep.apsis_pairs} spread={spread:.1e}")
    verdict(3, "trapping for the four design pairs", ok, "; ".join(parts))


def test_04_radius_trend(trend_serial):
    n_c = trend_serial.column("swept_value").astype(float)
    r_min = trend_serial.column("r_min").astype(float)
    r_max = trend_serial.column("r_max").astype(float)
    rho_min = spearmanr(n_c, r_min).statistic
    rho_max = spearmanr(n_c, r_max).statistic
    monotone = bool(np.all(np.diff(r_min) >= 0) and np.all(np.diff(r_max) <= 0))
    trapped = all(c == "TrappedOpenOrbit" for c in trend_serial.column("classification"))
    ok = monotone and trapped and rho_min == pytest.approx(1.0, abs=1e-12) \
        and rho_max == pytest.approx(-1.0, abs=1e-12)
    verdict(4, "radius trend over 13 background values", ok,
            f"rank corr r_min {rho_min:+.12f}, r_max {rho_max:+.12f}; r_min {r_min[0]:.4f}->{r_min[-1]:.4f}, "
            f"r_max {r_max[0]:.4f}->{r_max[-1]:.4f}")


def test_05_mexican_hat(gaussian, mexican_hat):
    g = simulate(gaussian, LaunchRule(), LONG)
    m = simulate(mexican_hat, LaunchRule(), LONG)
    c = compare_profiles(g.report, m.report)
    # for the record: the Gaussian's launch state reused verbatim
    m_same = simulate(mexican_hat, g.launch, LONG)
    c_same = compare_profiles(g.report, m_same.report)
    ok = c.width_change < 0.0 < c.frequency_change
    verdict(5, "Mexican hat vs Gaussian (same launch rule)", ok,
            f"width {100 * c.width_change:+.2f}%, frequency {100 * c.frequency_change:+.2f}% "
            f"(same launch state instead: width {100 * c_same.width_change:+.2f}%, "
            f"frequency {100 * c_same.frequency_change:+.2f}%)")


def test_06_stability_algebra(gaussian, rng):
    draws = rng.uniform([0.05, -1.0, -1.0], [5.0, 1.0, 1.0], (10_000, 3))
    sum_err = prod_err = 0.0
    for r0, k0, b in draws:
        rep = linearize(gaussian, r0, k0, b)
        sum_err = max(sum_err, abs(rep.lambda1 + rep.lambda2 - 2 * rep.V))
        prod_err = max(prod_err, abs(rep.lambda1 * rep.lambda2 + rep.W))
    circ, count = 0.0, 0
    for r0, b in rng.uniform([0.05, -1.0], [5.0, 1.0], (10_000, 2)):
        rep = linearize(gaussian, r0, 0.0, b)
        if rep.W <= 0.0:
            circ = max(circ, abs(rep.max_real))
            count += 1
    ok = sum_err <= 1e-12 and prod_err <= 1e-12 and circ <= 1e-14 and count > 0
    verdict(6, "stability algebra", ok,
            f"|l1+l2-2V| {sum_err:.1e}, |l1*l2+W| {prod_err:.1e} (<= 1e-12, 1e4 draws); "
            f"circular max|Re l| {circ:.1e} (<= 1e-14, {count} draws with W <= 0)")


def test_07_energy_field(gaussian):
    r = np.linspace(0.05, 8.0, 160)
    rd = np.linspace(-1.0, 1.0, 81)
    field = energy_ratio_field(gaussian, r, rd, 0.9)
    peak = np.max(np.abs(field.values))
    beyond = np.max(np.abs(field.values[:, r >= field.critical_radius]))
    flat = energy_ratio_field(ProfileSpec.homogeneous(1.0), r, rd, 0.9)
    ok = beyond < 1e-5 * peak and np.all(flat.values == 0.0)
    verdict(7, "energy-supply field", ok,
            f"x_c = {field.critical_radius:.4f}, max beyond / grid max = {beyond / peak:.1e} (< 1e-5); "
            f"homogeneous grid all zero = {bool(np.all(flat.values == 0.0))}")


def test_08_rk4_oracle():
    worst, ok = 0.0, True
    horizon = 12.0  # a little over one radial period; RK4 at h = 1e-4 is slow
    for n_a, n_c in DESIGN_PAIRS:
        spec = gaussian_pair(n_a, n_c)
        rhs, y0 = build_system(spec, LaunchRule().resolve(spec))
        _, ys = rk4_fixed(rhs, y0, 1e-4, horizon)
        end = integrate(rhs, y0, IntegratorConfig(horizon=horizon)).end_state
        worst = max(worst, float(np.max(np.abs(ys[-1] - end))))
    ok = worst <= 1e-6
    verdict(8, "fixed-step RK4 oracle", ok, f"max end-state difference {worst:.2e} (<= 1e-6) at tau = {horizon}")


def test_09_determinism(trend, trend_serial):
    def rows(result):
        return [[fmt(v) for v in row.values()] for row in result.table()]

    again = run_sweep(trend, workers=1)
    pooled = run_sweep(trend, workers=4)
    ok = rows(trend_serial) == rows(again) == rows(pooled)
    verdict(9, "deterministic sweeps", ok,
            f"{len(trend_serial.rows)}-row table identical across repeat and 4 workers = {ok}")


def test_10_sensitivity(gaussian):
    double = sensitivity_probe(ProfileSpec.double_gaussian(), LaunchRule(), 0.05, LONG)
    single = sensitivity_probe(gaussian, LaunchRule(), 0.004, LONG)
    ok = double.exceeds_band and single.measurable
    verdict(10, "sensitivity to the background index", ok,
            f"double attractor dn=0.05: max radius change {double.max_radius_change:.2e} "
            f"(band {double.band_tol:.0e}, flip={double.classification_changed}); "
            f"Gaussian dn=0.004: {single.max_radius_change:.2e} (noise floor {single.noise_floor:.1e})")
