"""Adaptive Dormand-Prince 5(4) integration with dense output and events.

The stepper propagates the 5th order solution, controls the step with a PI
controller on the embedded 4th order error estimate, and keeps the
continuous extension of every accepted step so that events can be located
and trajectories resampled at arbitrary parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .geodesics import SingularityError

# termination reasons
HORIZON = "horizon"
ESCAPE = "escape"
SINGULARITY = "singularity"
STEP_FAILURE = "step-failure"

# Dormand & Prince (1980), with the continuous extension of Shampine (1986)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

# PI controller constants (Hairer, Norsett & Wanner, DOPRI5 defaults)
_SAFETY = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - 0.75 * _BETA
_FAC_SHRINK = 1 / 0.2  # at most 5x smaller
_FAC_GROW = 1 / 10.0   # at most 10x larger

EVENT_XTOL = 1e-12


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 10_000_000
    horizon: float = 100.0
    initial_step: float | None = None
    max_step: float = math.inf
    escape_radius: float = 8.0
    r_floor: float = 1e-9

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "horizon", "max_step", "escape_radius", "r_floor"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0 (got {value!r})")
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError(f"initial_step must be > 0 (got {self.initial_step!r})")
        if int(self.max_steps) < 1:
            raise ValueError(f"max_steps must be >= 1 (got {self.max_steps!r})")

    def to_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_steps": int(self.max_steps),
            "horizon": self.horizon,
            "initial_step": self.initial_step,
            "max_step": self.max_step if math.isfinite(self.max_step) else None,
            "escape_radius": self.escape_radius,
            "r_floor": self.r_floor,
        }


@dataclass(frozen=True)
class EventSpec:
    """Zero crossing of ``func(param, state)``.

    ``direction`` > 0 only triggers on - to + crossings, < 0 on + to -.
    """

    kind: str
    func: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: bool = False


@dataclass(frozen=True)
class Event:
    kind: str
    param: float
    state: np.ndarray


@dataclass
class Trajectory:
    params: np.ndarray
    states: np.ndarray
    events: list[Event]
    termination: str
    formulation: object = None
    message: str = ""
    nfev: int = 0
    # continuous extension: step start, step size, start state, coefficients
    _seg_t: np.ndarray = field(default=None, repr=False)
    _seg_h: np.ndarray = field(default=None, repr=False)
    _seg_y: np.ndarray = field(default=None, repr=False)
    _seg_q: np.ndarray = field(default=None, repr=False)

    @property
    def end_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def n_steps(self) -> int:
        return len(self.params) - 1

    def interpolate(self, param):
        """Dense-output state(s) at ``param`` (scalar or array) inside the run."""
        scalar = np.ndim(param) == 0
        ps = np.atleast_1d(np.asarray(param, dtype=float))
        lo, hi = self.params[0], self.params[-1]
        if np.any(ps < lo) or np.any(ps > hi):
            raise ValueError(f"parameter outside integrated range [{lo}, {hi}]")
        if len(self._seg_t) == 0:
            out = np.repeat(self.states[:1], len(ps), axis=0)
            return out[0] if scalar else out
        idx = np.searchsorted(self._seg_t, ps, side="right") - 1
        idx = np.clip(idx, 0, len(self._seg_t) - 1)
        h = self._seg_h[idx]
        theta = (ps - self._seg_t[idx]) / h
        powers = np.stack([theta, theta ** 2, theta ** 3, theta ** 4], axis=1)
        out = self._seg_y[idx] + h[:, None] * np.einsum("kij,kj->ki", self._seg_q[idx], powers)
        return out[0] if scalar else out

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def polar_view(self) -> dict:
        return self.formulation.polar_view(self.params, self.states)


def _rms(x):
    return math.sqrt(float(np.dot(x, x)) / len(x))


def _initial_step(rhs, t0, y0, f0, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _dp_step(rhs, t, y, f, h):
    k = np.empty((7, len(y)))
    k[0] = f
    for i in range(1, 7):
        k[i] = rhs(t + _C[i] * h, y + h * (_A[i] @ k[:i]))
    # stage 7 is evaluated at the propagated solution (FSAL)
    y_new = y + h * (_A[6] @ k[:6])
    return y_new, k


def integrate(rhs, y0, config: IntegratorConfig = IntegratorConfig(),
              events: Sequence[EventSpec] = (), t0: float = 0.0) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t0 + config.horizon``.

    The run stops at the horizon, at the first terminal event, when a step
    underflows (``step-failure``), or when the right-hand side hits the
    origin guard (``singularity``).  All of these are reported through
    ``Trajectory.termination``; nothing is raised.
    """
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("launch state must be finite")
    rtol, atol = config.rel_tol, config.abs_tol
    t_end = t0 + config.horizon
    formulation = rhs if hasattr(rhs, "polar_view") else None

    params, states = [t0], [y.copy()]
    seg_t, seg_h, seg_y, seg_q = [], [], [], []
    found: list[Event] = []
    nfev = 0

    def finish(reason, message=""):
        n = len(y)
        return Trajectory(
            params=np.array(params), states=np.array(states), events=sorted(found, key=lambda e: e.param),
            termination=reason, formulation=formulation, message=message, nfev=nfev,
            _seg_t=np.array(seg_t), _seg_h=np.array(seg_h),
            _seg_y=np.array(seg_y).reshape(-1, n), _seg_q=np.array(seg_q).reshape(-1, n, 4))

    try:
        f = rhs(t0, y)
    except SingularityError as exc:
        return finish(SINGULARITY, str(exc))
    nfev += 1
    g_prev = [ev.func(t0, y) for ev in events]

    if config.initial_step is not None:
        h = config.initial_step
    else:
        try:
            h = _initial_step(rhs, t0, y, f, rtol, atol)
        except SingularityError:
            h = 1e-6
        nfev += 1
    h = min(h, config.max_step)
    err_old = 1e-4
    rejected = False
    t = t0
    steps = 0

    while t < t_end:
        if steps >= config.max_steps:
            return finish(STEP_FAILURE, f"max_steps={config.max_steps} exhausted at t={t!r}")
        h_min = 16 * np.spacing(max(abs(t), 1.0))
        h = min(h, config.max_step)
        last = t + h >= t_end or t_end - (t + h) < h_min
        if last:
            h = t_end - t
        if h < h_min:
            return finish(STEP_FAILURE, f"step size underflow at t={t!r}")

        try:
            y_new, k = _dp_step(rhs, t, y, f, h)
            nfev += 6
        except SingularityError as exc:
            h *= 0.25
            rejected = True
            if h < h_min:
                return finish(SINGULARITY, str(exc))
            continue
        steps += 1

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(h * (_E @ k) / scale)
        if not math.isfinite(err):
            h *= 0.25
            rejected = True
            continue

        fac11 = err ** _EXPO1
        if err > 1.0:
            h = h / min(_FAC_SHRINK, fac11 / _SAFETY)
            rejected = True
            continue

        # accepted
        t_new = t_end if last else t + h
        q = k.T @ _P
        seg_t.append(t)
        seg_h.append(h)
        seg_y.append(y)
        seg_q.append(q)

        terminal_at = None
        if events:
            def dense(s, t=t, h=h, y=y, q=q):
                th = (s - t) / h
                return y + h * (q @ np.array([th, th * th, th ** 3, th ** 4]))

            g_new = []
            for i, ev in enumerate(events):
                g0, g1 = g_prev[i], ev.func(t_new, y_new)
                g_new.append(g1)
                up = g0 < 0.0 <= g1
                down = g0 > 0.0 >= g1
                if not ((up and ev.direction >= 0) or (down and ev.direction <= 0)):
                    continue
                if g1 == 0.0:
                    te = t_new
                else:
                    te = brentq(lambda s: ev.func(s, dense(s)), t, t_new,
                                xtol=EVENT_XTOL, rtol=4 * np.finfo(float).eps)
                found.append(Event(ev.kind, te, y_new.copy() if te == t_new else dense(te)))
                if ev.terminal and (terminal_at is None or te < terminal_at[0]):
                    terminal_at = (te, ev.kind)
            g_prev = g_new

        if terminal_at is not None:
            te, kind = terminal_at
            found[:] = [e for e in found if e.param <= te]
            params.append(te)
            states.append(y_new.copy() if te == t_new else dense(te))
            return finish(kind)

        fac = fac11 / err_old ** _BETA
        fac = max(_FAC_GROW, min(_FAC_SHRINK, fac / _SAFETY))
        h_next = h / fac
        if rejected:
            h_next = min(h_next, h)
        err_old = max(err, 1e-4)
        rejected = False

        t, y, f = t_new, y_new, k[6]
        params.append(t)
        states.append(y.copy())
        h = h_next

    return finish(HORIZON)


# -- standard events ---------------------------------------------------------

def apsis_event(formulation) -> EventSpec:
    """Non-terminal event on radial-velocity zero crossings."""
    i = formulation.rdot_index
    return EventSpec("apsis", lambda t, y: y[i])


def singularity_event(formulation, r_floor: float) -> EventSpec:
    i = formulation.r_index
    return EventSpec(SINGULARITY, lambda t, y: y[i] - r_floor, direction=-1, terminal=True)


def escape_radius_for(spec, r_esc: float, chi_floor: float = 1e-12) -> float:
    """Smallest radius >= r_esc beyond which chi(r) stays above -chi_floor."""
    from .analysis import critical_radius

    return max(r_esc, critical_radius(spec, chi_tol=chi_floor))


def escape_event(formulation, spec, r_esc: float) -> EventSpec:
    """Terminal event: outward crossing of the effective escape radius.

    The radius is pushed out until the index is flat to 1e-12 so that an
    outbound ray past it can no longer be turned around.
    """
    i = formulation.r_index
    radius = escape_radius_for(spec, r_esc)
    return EventSpec(ESCAPE, lambda t, y: y[i] - radius, direction=1, terminal=True)


def standard_events(formulation, spec, config: IntegratorConfig) -> list[EventSpec]:
    return [singularity_event(formulation, config.r_floor),
            escape_event(formulation, spec, config.escape_radius)]


# -- apsides -----------------------------------------------------------------

@dataclass(frozen=True)
class ApsisEvent:
    label: str  # "min" or "max"
    param: float
    time: float
    r: float
    state: np.ndarray


def detect_apsides(traj: Trajectory, noise: float = 1e-9) -> list[ApsisEvent]:
    """Radial turning points of a trajectory.

    Crossings of r_dot are located on the dense output and labelled by the
    direction of the crossing (+ to - is a maximum).  Adjacent turning points
    whose radii differ by less than ``noise`` are treated as round-off jitter
    and dropped in pairs, so a circular orbit yields no apsides.
    """
    form = traj.formulation
    i_rd, i_r = form.rdot_index, form.r_index
    rd = traj.states[:, i_rd]
    raw = []
    for j in range(len(rd) - 1):
        a, b = rd[j], rd[j + 1]
        if a == 0.0 and j == 0:
            continue
        if not ((a > 0.0 >= b) or (a < 0.0 <= b)):
            continue
        t0, t1 = traj.params[j], traj.params[j + 1]
        if b == 0.0:
            tp = t1
        else:
            tp = brentq(lambda s: traj.interpolate(s)[i_rd], t0, t1,
                        xtol=EVENT_XTOL, rtol=4 * np.finfo(float).eps)
        state = traj.interpolate(tp)
        label = "max" if a > 0.0 else "min"
        raw.append((label, tp, state))

    kept = []
    for item in raw:
        if kept and abs(kept[-1][2][i_r] - item[2][i_r]) < noise:
            kept.pop()
            continue
        kept.append(item)

    out = []
    for label, tp, state in kept:
        time = float(form.polar_view([tp], state[None, :])["time"][0])
        out.append(ApsisEvent(label, float(tp), time, float(state[i_r]), state))
    return out


# -- fixed-step oracle -------------------------------------------------------

def rk4_fixed(rhs, y0, h: float, t_end: float, t0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4 to ``t_end`` (last step shortened to land on it).

    Returns the parameter grid and the states; used only as a cross-check.
    """
    y = np.array(y0, dtype=float)
    n_full = int(math.floor((t_end - t0) / h + 1e-9))
    ts = [t0]
    ys = [y.copy()]
    t = t0
    for i in range(n_full + 1):
        step = h if i < n_full else t_end - t
        if step <= 1e-15 * max(1.0, abs(t)):
            break
        k1 = rhs(t, y)
        k2 = rhs(t + step / 2, y + step / 2 * k1)
        k3 = rhs(t + step / 2, y + step / 2 * k2)
        k4 = rhs(t + step, y + step * k3)
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h if i < n_full else t_end
        ts.append(t)
        ys.append(y.copy())
    return np.array(ts), np.array(ys)
