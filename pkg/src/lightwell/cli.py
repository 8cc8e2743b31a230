"""Command-line front end.

    lightwell run CONFIG [-o DIR]        trajectory table + orbit report
    lightwell sweep CONFIG [-o DIR]      sweep table + per-row reports
    lightwell phase CONFIG [-o DIR]      phase-space tables (+ energy-ratio grid)
    lightwell stability CONFIG [-o DIR]  Lyapunov stability map
    lightwell validate CONFIG [-o DIR]   profile validation report

Exit codes: 0 success, 2 configuration error, 3 run ended on the origin
guard or a step failure (outputs are still written).
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import energy_ratio_field, energy_supply_ratio, linearize
from .config import ConfigError, RunConfig, load
from .geodesics import null_constraint
from .integrator import SINGULARITY, STEP_FAILURE
from .launch import LaunchError
from .output import write_csv, write_json
from .profiles import validate
from .sweep import SWEEP_COLUMNS, SweepConfigError, SweepSpec, run_sweep, simulate

log = logging.getLogger("lightwell")

OUTPUT_ENV = "LIGHTWELL_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

TRAJECTORY_COLUMNS = ("param", "r", "phi", "r_dot", "phi_dot", "x", "y", "ell", "E_t")
STABILITY_COLUMNS = ("r0", "kappa0", "beta", "V", "W", "re_lambda1", "re_lambda2", "stable",
                     "im_lambda1", "im_lambda2")


def _decimate(n: int, step: int) -> np.ndarray:
    idx = np.arange(0, n, step)
    if idx[-1] != n - 1:
        idx = np.append(idx, n - 1)
    return idx


def _simulate(cfg: RunConfig):
    return simulate(cfg.profile, cfg.launch, cfg.integrator, cfg.classify, cfg.formulation)


def _runtime_failed(sim) -> bool:
    return sim.trajectory.termination in (SINGULARITY, STEP_FAILURE)


def _report(cfg: RunConfig, sim, command: str) -> dict:
    traj, rep = sim.trajectory, sim.report
    conservation = {"ell_drift": rep.ell_drift}
    if cfg.formulation == "eikonal":
        c = np.array([null_constraint(cfg.profile, s) for s in traj.states])
        conservation["null_constraint_max"] = float(np.max(np.abs(c)))
    return {
        "command": command,
        "version": __version__,
        "classification": rep.classification.value,
        "premise": rep.premise,
        "metrics": {k: v for k, v in rep.to_dict().items()
                    if k not in ("classification", "premise", "termination", "ell_drift")},
        "conservation": conservation,
        "termination": {"reason": traj.termination, "message": traj.message,
                        "steps": traj.n_steps, "rhs_evaluations": traj.nfev},
        "launch": dict(sim.launch._asdict()),
        "config": cfg.to_dict(),
    }


def _trajectory_rows(cfg: RunConfig, sim):
    view = sim.trajectory.polar_view()
    spec = cfg.profile
    for i in _decimate(len(view["r"]), cfg.output.decimation):
        r, phi = float(view["r"][i]), float(view["phi"][i])
        rd, pd = float(view["r_dot"][i]), float(view["phi_dot"][i])
        n = spec.n(r)
        ell = n * n * r * r * pd
        yield (float(sim.trajectory.params[i]), r, phi, rd, pd,
               r * math.cos(phi), r * math.sin(phi), ell, energy_supply_ratio(spec, r, rd, ell))


def cmd_run(cfg: RunConfig, out: Path) -> int:
    sim = _simulate(cfg)
    write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, _trajectory_rows(cfg, sim))
    write_json(out / "report.json", _report(cfg, sim, "run"))
    log.info("classification: %s (%s)", sim.report.classification.value, sim.trajectory.termination)
    return EXIT_RUNTIME if _runtime_failed(sim) else EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a [sweep] section", "sweep")
    sw = cfg.sweep
    spec = SweepSpec(base=cfg.profile, parameter=sw.parameter, values=sw.values, launch=cfg.launch,
                     integrator=cfg.integrator, classify=cfg.classify, formulation=cfg.formulation,
                     pin_peak=sw.pin_peak)
    try:
        result = run_sweep(spec, workers=sw.workers)
    except SweepConfigError as exc:
        raise ConfigError(str(exc), "sweep.values") from None
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, result.table())
    for i, row in enumerate(result.rows):
        doc = {"swept_value": row.value, "status": row.status, "error": row.error,
               "profile": row.spec.to_dict(),
               "report": row.report.to_dict() if row.report else None}
        write_json(out / "reports" / f"row_{i:03d}.json", doc)
    write_json(out / "sweep_config.json", cfg.to_dict())
    failed = [r for r in result.rows if r.status != "ok"]
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_phase(cfg: RunConfig, out: Path) -> int:
    sim = _simulate(cfg)
    view = sim.trajectory.polar_view()
    idx = _decimate(len(view["r"]), cfg.output.decimation)
    params = sim.trajectory.params
    write_csv(out / "phase_velocities.csv", ("param", "r_dot", "phi_dot"),
              ((params[i], view["r_dot"][i], view["phi_dot"][i]) for i in idx))
    write_csv(out / "phase_radial.csv", ("r", "r_dot"), ((view["r"][i], view["r_dot"][i]) for i in idx))
    write_csv(out / "phase_angle.csv", ("phi_mod_2pi", "abs_r_dot"),
              ((float(np.mod(view["phi"][i], 2 * math.pi)), abs(view["r_dot"][i])) for i in idx))
    report = _report(cfg, sim, "phase")
    ph = cfg.phase
    if ph.energy_field:
        ell = ph.ell if ph.ell is not None else sim.report.ell
        field = energy_ratio_field(cfg.profile, np.linspace(*ph.r_range, ph.r_points),
                                   np.linspace(*ph.r_dot_range, ph.r_dot_points), ell,
                                   chi_tol=ph.chi_tol / cfg.profile.sigma)
        write_csv(out / "energy_field.csv", ("r", "r_dot", "E_t"), field.rows())
        report["energy_field"] = {"ell": field.ell, "critical_radius": field.critical_radius,
                                  "max_abs": float(np.max(np.abs(field.values)))}
    write_json(out / "report.json", report)
    return EXIT_RUNTIME if _runtime_failed(sim) else EXIT_OK


def cmd_stability(cfg: RunConfig, out: Path) -> int:
    if cfg.stability is None:
        raise ConfigError("stability command needs a [stability] section", "stability")
    st = cfg.stability
    rows = []
    for r0, k0, beta in itertools.product(st.r0, st.kappa0, st.beta):
        rep = linearize(cfg.profile, r0, k0, beta)
        rows.append((r0, k0, beta, rep.V, rep.W, rep.lambda1.real, rep.lambda2.real,
                     rep.lyapunov_stable, rep.lambda1.imag, rep.lambda2.imag))
    write_csv(out / "stability.csv", STABILITY_COLUMNS, rows)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    report = validate(cfg.profile)
    write_json(out / "validation.json", {"profile": cfg.profile.to_dict(), **report.to_dict()})
    print("valid" if report.valid else "invalid: " + "; ".join(report.violations))
    return EXIT_OK if report.valid else EXIT_CONFIG


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "phase": cmd_phase,
            "stability": cmd_stability, "validate": cmd_validate}
HELP = {
    "run": "integrate one ray; write trajectory.csv and report.json",
    "sweep": "sweep one profile parameter; write sweep.csv and per-row reports",
    "phase": "write phase-space tables and the energy-supply grid",
    "stability": "tabulate linear stability over an (r0, kappa0, beta) grid",
    "validate": "check the profile against its bounds and smoothness",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lightwell",
                                     description="Light trapping in centro-symmetric index maps")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("config", help="TOML or JSON run configuration")
        p.add_argument("-o", "--output", default=None,
                       help=f"output directory (default: ${OUTPUT_ENV} or ./lightwell-out)")
        p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.output or os.environ.get(OUTPUT_ENV) or "lightwell-out")
    try:
        cfg = load(args.config, check_profile=args.command != "validate")
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except LaunchError as exc:
        print(f"config error (launch): {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
