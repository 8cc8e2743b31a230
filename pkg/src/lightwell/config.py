"""Run configuration: one TOML (or JSON) document per run.

Example::

    [profile]
    kind = "gaussian"
    n_a = 3.0
    n_c = 0.8

    [launch]
    rule = "ledge"

    [integrator]
    horizon = 250.0

Unknown sections or keys are rejected; every error carries the key path and,
when it can be found in the source text, its line and column.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ClassifyConfig
from .geodesics import PolarRayState
from .integrator import IntegratorConfig
from .launch import ANCHORS, LaunchRule
from .profiles import DEFAULT_BOUNDS, ProfileKind, ProfileSpec, validate
from .sweep import FORMULATIONS, SWEEPABLE

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 column: int | None = None):
        self.message = message
        self.key = key
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}, column {column or 1}")
        if key:
            where.append(key)
        prefix = f"config error ({'; '.join(where)})" if where else "config error"
        super().__init__(f"{prefix}: {message}")


_NUM = "number"
_INT = "integer"
_STR = "string"
_BOOL = "boolean"
_PAIR = "pair"
_LIST = "list"      # list of numbers
_GRID = "grid"      # list of numbers or {start, stop, num}

SCHEMA = {
    "profile": {"kind": _STR, "n_a": _NUM, "n_c": _NUM, "n_d": _NUM, "sigma": _NUM,
                "r_off1": _NUM, "r_off2": _NUM, "bounds": _PAIR, "peak": _NUM},
    "launch": {"rule": _STR, "offset": _NUM, "speed": _NUM, "phi": _NUM,
               "r": _NUM, "r_dot": _NUM, "phi_dot": _NUM},
    "integrator": {"formulation": _STR, "rel_tol": _NUM, "abs_tol": _NUM, "max_steps": _INT,
                   "horizon": _NUM, "initial_step": _NUM, "max_step": _NUM,
                   "escape_radius": _NUM, "r_floor": _NUM},
    "classify": {"n_min": _INT, "band_tol": _NUM, "circ_tol": _NUM, "apsis_noise": _NUM},
    "output": {"decimation": _INT},
    "phase": {"energy_field": _BOOL, "r_range": _PAIR, "r_points": _INT,
              "r_dot_range": _PAIR, "r_dot_points": _INT, "ell": _NUM, "chi_tol": _NUM},
    "sweep": {"parameter": _STR, "values": _GRID, "pin_peak": _NUM, "workers": _INT},
    "stability": {"r0": _GRID, "kappa0": _GRID, "beta": _GRID},
}
_GRID_KEYS = {"start", "stop", "num"}


def _locate(text: str | None, dotted: str) -> tuple[int | None, int | None]:
    """Best-effort line/column of ``section.key`` in TOML or JSON source."""
    if not text:
        return None, None
    parts = dotted.split(".")
    section, key = parts[0], parts[-1] if len(parts) > 1 else None
    lines = text.splitlines()
    current = None
    for i, line in enumerate(lines, start=1):
        header = re.match(r"\s*\[\s*([A-Za-z0-9_.-]+)\s*\]", line)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return i, line.index("[") + 1
            continue
        if key is not None and current == section:
            m = re.match(rf"\s*({re.escape(key)})\s*=", line)
            if m:
                return i, m.start(1) + 1
    # JSON: first quoted key after the quoted section name
    sec = re.search(rf'"{re.escape(section)}"\s*:', text)
    if sec:
        pos = sec.start()
        if key is not None:
            m = re.compile(rf'"{re.escape(key)}"\s*:').search(text, sec.end())
            if m:
                pos = m.start()
        line = text.count("\n", 0, pos) + 1
        column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        return line, column
    return None, None


@dataclass(frozen=True)
class OutputConfig:
    decimation: int = 1


@dataclass(frozen=True)
class PhaseConfig:
    energy_field: bool = True
    r_range: tuple[float, float] = (0.05, 6.0)
    r_points: int = 120
    r_dot_range: tuple[float, float] = (-0.5, 0.5)
    r_dot_points: int = 81
    ell: float | None = None
    chi_tol: float = 1e-6


@dataclass(frozen=True)
class SweepBlock:
    parameter: str
    values: tuple[float, ...]
    pin_peak: float | None = None
    workers: int = 1


@dataclass(frozen=True)
class StabilityBlock:
    r0: tuple[float, ...]
    kappa0: tuple[float, ...]
    beta: tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    launch: LaunchRule | PolarRayState = field(default_factory=LaunchRule)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    formulation: str = "polar"
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    sweep: SweepBlock | None = None
    stability: StabilityBlock | None = None

    def to_dict(self) -> dict:
        """Fully resolved configuration; loading it back yields an equal RunConfig."""
        if isinstance(self.launch, LaunchRule):
            launch = self.launch.to_dict()
        else:
            launch = {"r": self.launch.r, "phi": self.launch.phi,
                      "r_dot": self.launch.r_dot, "phi_dot": self.launch.phi_dot}
        integ = self.integrator.to_dict()
        integ = {"formulation": self.formulation, **{k: v for k, v in integ.items() if v is not None}}
        ph = self.phase
        phase = {"energy_field": ph.energy_field, "r_range": list(ph.r_range), "r_points": ph.r_points,
                 "r_dot_range": list(ph.r_dot_range), "r_dot_points": ph.r_dot_points,
                 "chi_tol": ph.chi_tol}
        if ph.ell is not None:
            phase["ell"] = ph.ell
        out = {
            "profile": self.profile.to_dict(),
            "launch": launch,
            "integrator": integ,
            "classify": self.classify.to_dict(),
            "output": {"decimation": self.output.decimation},
            "phase": phase,
        }
        if self.sweep is not None:
            sw = {"parameter": self.sweep.parameter, "values": list(self.sweep.values),
                  "workers": self.sweep.workers}
            if self.sweep.pin_peak is not None:
                sw["pin_peak"] = self.sweep.pin_peak
            out["sweep"] = sw
        if self.stability is not None:
            st = self.stability
            out["stability"] = {"r0": list(st.r0), "kappa0": list(st.kappa0), "beta": list(st.beta)}
        return out


class _Parser:
    def __init__(self, text: str | None, check_profile: bool = True):
        self.text = text
        self.strict_profile = check_profile

    def error(self, message: str, key: str) -> ConfigError:
        line, col = _locate(self.text, key)
        return ConfigError(message, key, line, col)

    def check_type(self, value, kind: str, key: str):
        def is_num(v):
            return isinstance(v, (int, float)) and not isinstance(v, bool)

        if kind == _NUM:
            if not is_num(value):
                raise self.error(f"expected a number, got {value!r}", key)
            return float(value)
        if kind == _INT:
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if not isinstance(value, int) or isinstance(value, bool):
                raise self.error(f"expected an integer, got {value!r}", key)
            return value
        if kind == _STR:
            if not isinstance(value, str):
                raise self.error(f"expected a string, got {value!r}", key)
            return value
        if kind == _BOOL:
            if not isinstance(value, bool):
                raise self.error(f"expected true or false, got {value!r}", key)
            return value
        if kind == _PAIR:
            if not (isinstance(value, list) and len(value) == 2 and all(is_num(v) for v in value)):
                raise self.error(f"expected a pair of numbers, got {value!r}", key)
            return (float(value[0]), float(value[1]))
        if kind == _GRID:
            if isinstance(value, dict):
                extra = set(value) - _GRID_KEYS
                if extra:
                    raise self.error(f"unknown grid key(s) {sorted(extra)}; expected start, stop, num", key)
                missing = _GRID_KEYS - set(value)
                if missing:
                    raise self.error(f"grid is missing {sorted(missing)}", key)
                start = self.check_type(value["start"], _NUM, key)
                stop = self.check_type(value["stop"], _NUM, key)
                num = self.check_type(value["num"], _INT, key)
                if num < 1:
                    raise self.error("grid num must be >= 1", key)
                return tuple(float(v) for v in np.linspace(start, stop, num))
            if not (isinstance(value, list) and all(is_num(v) for v in value)):
                raise self.error(f"expected a list of numbers or {{start, stop, num}}, got {value!r}", key)
            return tuple(float(v) for v in value)
        raise AssertionError(kind)

    def section(self, raw: dict, name: str) -> dict:
        block = raw.get(name, {})
        if not isinstance(block, dict):
            raise self.error("expected a table", name)
        out = {}
        for key, value in block.items():
            dotted = f"{name}.{key}"
            if key not in SCHEMA[name]:
                allowed = ", ".join(SCHEMA[name])
                raise self.error(f"unknown key {key!r} (allowed: {allowed})", dotted)
            if value is None:  # JSON null means "use the default"
                continue
            out[key] = self.check_type(value, SCHEMA[name][key], dotted)
        return out

    def parse(self, raw: dict) -> RunConfig:
        if not isinstance(raw, dict):
            raise ConfigError("top level must be a table")
        for name in raw:
            if name not in SCHEMA:
                raise self.error(f"unknown section [{name}] (allowed: {', '.join(SCHEMA)})", name)

        prof = self.section(raw, "profile")
        try:
            kind = ProfileKind.parse(prof.pop("kind", "gaussian"))
        except ValueError as exc:
            raise self.error(str(exc), "profile.kind") from None
        peak = prof.pop("peak", None)
        prof.setdefault("bounds", DEFAULT_BOUNDS)
        if kind is ProfileKind.HOMOGENEOUS:
            prof.setdefault("n_a", 0.0)
        spec = ProfileSpec(kind, **prof)
        if peak is not None:
            try:
                spec = spec.with_peak(peak)
            except ValueError as exc:
                raise self.error(str(exc), "profile.peak") from None
        sweep = self.parse_sweep(raw)
        # a sweep validates every swept profile itself
        if sweep is None and self.strict_profile:
            self.check_profile(spec)
        elif spec.sigma <= 0 or not math.isfinite(spec.sigma):
            raise self.error(f"sigma must be > 0 (got {spec.sigma!r})", "profile.sigma")

        launch = self.parse_launch(raw)

        integ = self.section(raw, "integrator")
        formulation = integ.pop("formulation", "polar")
        if formulation not in FORMULATIONS:
            raise self.error(f"unknown formulation {formulation!r} (expected one of {FORMULATIONS})",
                             "integrator.formulation")
        try:
            integrator = IntegratorConfig(**integ)
        except ValueError as exc:
            key = str(exc).split(" ", 1)[0]
            raise self.error(str(exc), f"integrator.{key}") from None

        cls = self.section(raw, "classify")
        classify = ClassifyConfig(**cls)
        for key in ("n_min", "band_tol", "circ_tol", "apsis_noise"):
            if not getattr(classify, key) > 0:
                raise self.error(f"{key} must be > 0", f"classify.{key}")

        out = self.section(raw, "output")
        if out.get("decimation", 1) < 1:
            raise self.error("decimation must be >= 1", "output.decimation")
        output = OutputConfig(**out)

        ph = self.section(raw, "phase")
        phase = PhaseConfig(**ph)
        for key in ("r_range", "r_dot_range"):
            lo, hi = getattr(phase, key)
            if not lo < hi:
                raise self.error(f"{key} must be increasing", f"phase.{key}")
        if phase.r_range[0] <= 0:
            raise self.error("r_range must be positive", "phase.r_range")
        for key in ("r_points", "r_dot_points"):
            if getattr(phase, key) < 2:
                raise self.error(f"{key} must be >= 2", f"phase.{key}")

        stability = None
        if "stability" in raw:
            st = self.section(raw, "stability")
            for key in ("r0", "kappa0", "beta"):
                if key not in st or len(st[key]) == 0:
                    raise self.error(f"stability grid needs a non-empty {key!r}", f"stability.{key}")
            if any(r <= 0 for r in st["r0"]):
                raise self.error("r0 values must be > 0", "stability.r0")
            stability = StabilityBlock(**st)

        return RunConfig(profile=spec, launch=launch, integrator=integrator, formulation=formulation,
                         classify=classify, output=output, phase=phase, sweep=sweep, stability=stability)

    def check_profile(self, spec: ProfileSpec):
        report = validate(spec)
        if report.valid:
            return
        message = report.violations[0]
        head = message.split(" ", 1)[0]
        key = f"profile.{head}" if head in SCHEMA["profile"] else "profile"
        if "bound" in message:
            key = "profile.bounds" if "lo < hi" in message else "profile"
        raise self.error("; ".join(report.violations), key)

    def parse_launch(self, raw: dict):
        la = self.section(raw, "launch")
        explicit = {"r", "r_dot", "phi_dot"} & set(la)
        if explicit:
            if "rule" in la or "offset" in la or "speed" in la:
                raise self.error("give either an explicit state (r, phi, r_dot, phi_dot) or a rule, not both",
                                 "launch")
            for key in ("r", "phi_dot"):
                if key not in la:
                    raise self.error(f"explicit launch needs {key!r}", f"launch.{key}")
            if not la["r"] > 0:
                raise self.error("launch radius must be > 0", "launch.r")
            return PolarRayState(la["r"], la.get("phi", 0.0), la.get("r_dot", 0.0), la["phi_dot"])
        rule = la.pop("rule", "ledge")
        if rule not in ANCHORS:
            raise self.error(f"unknown launch rule {rule!r} (expected one of {ANCHORS})", "launch.rule")
        try:
            return LaunchRule(anchor=rule, **la)
        except ValueError as exc:
            raise self.error(str(exc), "launch") from None

    def parse_sweep(self, raw: dict) -> SweepBlock | None:
        if "sweep" not in raw:
            return None
        sw = self.section(raw, "sweep")
        if "parameter" not in sw:
            raise self.error("sweep needs a 'parameter'", "sweep")
        if sw["parameter"] not in SWEEPABLE:
            raise self.error(f"cannot sweep {sw['parameter']!r} (expected one of {SWEEPABLE})",
                             "sweep.parameter")
        if not sw.get("values"):
            raise self.error("sweep needs a non-empty 'values' list", "sweep.values")
        if sw.get("workers", 1) < 1:
            raise self.error("workers must be >= 1", "sweep.workers")
        return SweepBlock(**sw)


def parse_config(raw: dict, text: str | None = None, check_profile: bool = True) -> RunConfig:
    return _Parser(text, check_profile).parse(raw)


def loads(text: str, fmt: str = "toml", check_profile: bool = True) -> RunConfig:
    if fmt == "json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, None, exc.lineno, exc.colno) from None
    else:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
            raise ConfigError(str(exc), None, line, col) from None
    return parse_config(raw, text, check_profile)


def load(path, check_profile: bool = True) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, "json" if path.suffix.lower() == ".json" else "toml", check_profile)
