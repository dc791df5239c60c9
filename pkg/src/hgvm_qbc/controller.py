"""Period-synchronous PI regulation of the output voltage through the duty ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import gain_ccm
from .designer import solve_duty
from .errors import ParameterError, UnreachableReferenceError
from .model import ConverterParams
from .simulator import SimConfig, Trace, _Engine, periodic_orbit, warm_start


@dataclass(frozen=True)
class PiConfig:
    """Discrete PI gains acting once per switching period.

    ``kp`` is in duty per volt, ``ki`` in duty per volt-second. With
    ``feedforward`` the ideal duty of the (shaped) reference is added to the
    PI output, so the integrator only trims losses. A reference step is
    shaped into a raised-cosine transition lasting ``ramp_time`` seconds
    (0 keeps hard steps).

    The defaults leave ``kp`` at zero: the converter's slow LC modes are
    barely damped, and proportional action on the period-averaged output
    pushes them unstable before it buys any speed.
    """

    kp: float = 0.0
    ki: float = 0.1
    duty_min: float = 0.05
    duty_max: float = 0.80
    feedforward: bool = True
    ramp_time: float = 12e-3

    def __post_init__(self):
        if not (0.0 < self.duty_min < self.duty_max < 1.0):
            raise ParameterError("need 0 < duty_min < duty_max < 1")
        if not (self.kp >= 0 and self.ki >= 0 and math.isfinite(self.kp) and math.isfinite(self.ki)):
            raise ParameterError("kp and ki must be finite and >= 0")
        if not (self.ramp_time >= 0 and math.isfinite(self.ramp_time)):
            raise ParameterError("ramp_time must be finite and >= 0")


@dataclass(frozen=True)
class StepScenario:
    """Reference schedule ``[(t, v_ref), ...]`` starting at t = 0."""

    schedule: tuple[tuple[float, float], ...]
    duration: float

    def __post_init__(self):
        sch = tuple((float(t), float(v)) for t, v in self.schedule)
        object.__setattr__(self, "schedule", sch)
        if not sch or sch[0][0] != 0.0:
            raise ParameterError("schedule must start at t = 0")
        times = [t for t, _ in sch]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParameterError("schedule times must be strictly increasing")
        if not self.duration > times[-1]:
            raise ParameterError("duration must extend past the last step")
        if any(v <= 0 for _, v in sch):
            raise ParameterError("references must be positive")

    def reference(self, t: float) -> float:
        ref = self.schedule[0][1]
        for ts, v in self.schedule:
            if t >= ts - 1e-12:
                ref = v
        return ref

    def shaped(self, t: float, ramp: float) -> float:
        """Reference with each step spread over a raised-cosine ``ramp``."""
        ref = self.schedule[0][1]
        for ts, v in self.schedule[1:]:
            if t < ts:
                break
            u = 1.0 if ramp <= 0 else min((t - ts) / ramp, 1.0)
            ref = ref + (v - ref) * 0.5 * (1.0 - math.cos(math.pi * u))
        return ref

    def segments(self):
        """(t_start, t_end, reference) per schedule entry."""
        ends = [t for t, _ in self.schedule[1:]] + [self.duration]
        return [(t, e, v) for (t, v), e in zip(self.schedule, ends)]


@dataclass(frozen=True)
class StepMetrics:
    settling_time: float
    overshoot: float
    steady_state_error: float
    ripple: float
    settled: bool

    def to_dict(self) -> dict:
        return {"settling_time": None if not self.settled else self.settling_time,
                "overshoot": self.overshoot, "steady_state_error": self.steady_state_error,
                "ripple": self.ripple, "settled": self.settled}


def pi_update(integrator: float, error: float, dt: float, cfg: PiConfig,
              bias: float = 0.0) -> tuple[float, float]:
    """One controller step with conditional-integration anti-windup.

    Returns ``(duty, integrator)``; the integrator only moves while the
    unclamped command ``bias + kp*e + integrator`` lies inside the limits.
    """
    if not dt > 0:
        raise ParameterError("dt must be positive")
    u = bias + cfg.kp * error + integrator
    if cfg.duty_min <= u <= cfg.duty_max:
        integrator = integrator + cfg.ki * error * dt
    return min(max(u, cfg.duty_min), cfg.duty_max), integrator


def step_metrics(t, v, ref: float, t_start: float, t_end: float, band: float = 0.02,
                 tail: float = 0.2) -> StepMetrics:
    """Settling, overshoot, steady error and ripple of one reference segment.

    ``t``/``v`` may be a whole trace; only ``t_start <= t <= t_end`` is used.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    sel = (t >= t_start - 1e-12) & (t <= t_end + 1e-12)
    t, v = t[sel], v[sel]
    if len(t) < 2:
        raise ParameterError("segment holds fewer than two samples")
    outside = np.abs(v - ref) > band * abs(ref)
    if not outside.any():
        settled, ts = True, 0.0
    elif outside[-1]:
        settled, ts = False, math.nan
    else:
        last = int(np.flatnonzero(outside)[-1])
        settled, ts = True, float(t[last + 1] - t_start)
    rising = v[0] <= ref
    exc = (v.max() - ref) if rising else (ref - v.min())
    overshoot = max(float(exc), 0.0) / abs(ref)
    tail_sel = t >= t_end - tail * (t_end - t_start)
    vt = v[tail_sel]
    err = abs(float(vt.mean()) - ref) / abs(ref)
    return StepMetrics(ts, overshoot, err, float(vt.max() - vt.min()), settled)


@dataclass
class ClosedLoopResult:
    trace: Trace
    metrics: list[StepMetrics]
    period_vo: np.ndarray
    period_ref: np.ndarray
    period_duty: np.ndarray


def check_reachable(vin: float, scenario: StepScenario, cfg: PiConfig) -> None:
    top = gain_ccm(cfg.duty_max) * vin
    low = gain_ccm(cfg.duty_min) * vin
    for _, v in scenario.schedule:
        if not low <= v <= top:
            raise UnreachableReferenceError(
                f"unreachable reference {v:g} V: duty limits give {low:.4g}..{top:.4g} V "
                f"from {vin:g} V")


def run_closed_loop(params: ConverterParams, cfg: PiConfig, scenario: StepScenario,
                    sim: SimConfig | None = None, start: str = "orbit") -> ClosedLoopResult:
    """Simulate the converter under PI control over a reference schedule.

    The converter starts in steady state at the ideal duty of the first
    reference and the integrator holds that duty. ``start="orbit"`` uses
    the periodic orbit found by shooting, ``"analytic"`` the closed-form
    warm start (which rings for a while). At every period boundary
    the period-averaged output is compared with the reference active for
    the next period, and the new duty applies to that whole period.
    """
    sim = sim or SimConfig(record_stride=50)
    check_reachable(params.vin, scenario, cfg)
    vin = params.vin

    def ff(ref):
        return solve_duty(vin, ref) if cfg.feedforward else 0.0

    d0 = min(max(solve_duty(vin, scenario.schedule[0][1]), cfg.duty_min), cfg.duty_max)
    p0 = params.with_(duty=d0)
    if start == "orbit":
        x0 = periodic_orbit(p0, sim)
    elif start == "analytic":
        x0 = warm_start(p0)
    else:
        raise ParameterError(f"start must be 'orbit' or 'analytic', got {start!r}")
    eng = _Engine(p0, sim, x0)
    ts = params.ts
    n = int(round(scenario.duration / ts))
    duty = d0
    integ = d0 - ff(scenario.schedule[0][1])
    vo_hist, ref_hist = [], []
    for k in range(n):
        mx = eng.run_period(duty)
        vo = mx[5] + mx[7] + mx[8]
        ref = scenario.shaped((k + 1) * ts, cfg.ramp_time)
        vo_hist.append(vo)
        ref_hist.append(ref)
        duty, integ = pi_update(integ, ref - vo, ts, cfg, bias=ff(ref))
    trace = eng.trace()
    metrics = [step_metrics(trace.t, trace.v_o, ref, a, b) for a, b, ref in scenario.segments()]
    return ClosedLoopResult(trace, metrics, np.array(vo_hist), np.array(ref_hist),
                            trace.period_duty.copy())
