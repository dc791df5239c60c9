"""Event-driven fixed-step simulation of the switched converter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernel
from .analysis import gain_ccm, steady_state_point
from .errors import (
    ChatterError, ConstraintDriftError, DCMError, NonFiniteStateError, ParameterError, ShootingError,
    SimulationError,
)
from .model import N_STATE, STATE_NAMES, BalanceReport, ConverterParams, State
from .network import (
    MON_NAMES, N_MON, OUT, OUT_NAMES, Network, diode_on, make_config, mode_of, q_on,
)

CAUSES = ("switch-on", "switch-off", "d5-current-zero", "d6-current-zero",
          "d5-turn-on", "d6-turn-on")

_ALLOWED_CAUSE = {(1, 2): "d5-current-zero", (2, 3): "switch-off",
                  (3, 4): "d6-current-zero", (4, 1): "switch-on"}


@dataclass(frozen=True)
class SimConfig:
    """Integration settings. ``dt=None`` means ``T_s / 2000``."""

    dt: float | None = None
    periods: int = 400
    warm_start: bool = True
    event_tol: float = 1e-6
    constraint_tol: float = 5.0
    record_stride: int = 4

    def __post_init__(self):
        if self.dt is not None and not (math.isfinite(self.dt) and self.dt > 0):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if int(self.periods) != self.periods or self.periods < 1:
            raise ParameterError(f"periods must be an integer >= 1, got {self.periods}")
        if not (self.event_tol > 0 and self.constraint_tol > 0):
            raise ParameterError("tolerances must be strictly positive")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ParameterError(f"record_stride must be an integer >= 1, got {self.record_stride}")

    def step_for(self, params: ConverterParams) -> float:
        dt = params.ts / 2000.0 if self.dt is None else float(self.dt)
        if dt > params.ts / 500.0 * (1 + 1e-12):
            raise ParameterError(f"dt = {dt:g} s exceeds T_s/500 = {params.ts / 500:g} s")
        return dt


@dataclass(frozen=True)
class ModeEvent:
    t: float
    from_mode: int
    to_mode: int
    cause: str

    @property
    def canonical(self) -> bool:
        return _ALLOWED_CAUSE.get((self.from_mode, self.to_mode)) == self.cause


@dataclass
class Trace:
    """Decimated samples plus every event sample, and per-period summaries.

    Sample arrays have one row per sample; ``x`` holds the nine states in
    ``STATE_NAMES`` order. Period arrays have one row per simulated period;
    ``period_x0`` has one extra row, the state after the last period.
    """

    params: ConverterParams
    dt: float
    t: np.ndarray
    x: np.ndarray
    config: np.ndarray
    period_t0: np.ndarray
    period_x0: np.ndarray
    period_mean_x: np.ndarray
    period_mean_vo2: np.ndarray
    period_max: np.ndarray
    period_duty: np.ndarray
    period_mode_time: np.ndarray
    period_causes: list
    _outputs: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_periods(self) -> int:
        return len(self.period_t0)

    @property
    def mode(self) -> np.ndarray:
        return np.array([mode_of(int(c)) for c in self.config], dtype=int)

    @property
    def v_o(self) -> np.ndarray:
        return self.x[:, 5] + self.x[:, 7] + self.x[:, 8]

    def outputs(self) -> np.ndarray:
        """Reconstructed device quantities, columns in ``OUT_NAMES`` order."""
        if self._outputs is None:
            net = Network(self.params)
            xe = np.hstack([self.x, np.ones((len(self.t), 1))])
            out = np.empty((len(self.t), len(OUT_NAMES)))
            for c in np.unique(self.config):
                rows = self.config == c
                out[rows] = xe[rows] @ net.maps(int(c))[1].T
            self._outputs = out
        return self._outputs

    def signal(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        if name == "mode":
            return self.mode
        if name in STATE_NAMES:
            return self.x[:, STATE_NAMES.index(name)]
        return self.outputs()[:, OUT[name]]

    def period_mean_vo(self) -> np.ndarray:
        m = self.period_mean_x
        return m[:, 5] + m[:, 7] + m[:, 8]

    def window(self, periods: int | None) -> slice:
        n = self.n_periods
        k = n if periods is None else min(int(periods), n)
        return slice(n - k, n)

    def sample_mask(self, periods: int | None) -> np.ndarray:
        w = self.window(periods)
        t0 = self.period_t0[w.start]
        return self.t >= t0 - 1e-15


class _Engine:
    """Stateful stepper shared by open-loop runs and the PI loop."""

    def __init__(self, params: ConverterParams, config: SimConfig, state: State | None = None):
        self.p = params
        self.cfg = config
        self.dt = config.step_for(params)
        self.net = Network(params)
        self.tol = config.event_tol
        if state is None:
            state = warm_start(params) if config.warm_start else State()
        self.t = state.t
        self.xe = np.append(state.as_array(), 1.0)
        q = state.mode in (1, 2)
        guess = [not q, q, not q, False, state.mode == 1, state.mode == 3]
        self.config = self.net.resolve(make_config(q, guess), self.xe, self.tol)
        self.step_count = 0
        cap = int(self.p.ts / self.dt / config.record_stride) + 64
        self._rec = np.empty((cap, 1 + N_STATE))
        self._rec_cfg = np.empty(cap, dtype=np.int16)
        self._rec_n = 0
        self._chunks: list[tuple[np.ndarray, np.ndarray]] = []
        self.events: list[ModeEvent] = []
        self._per: dict[str, list] = {k: [] for k in
                                      ("t0", "x0", "mx", "vo2", "mx_mon", "duty", "mt", "causes")}
        self._record(self.t)

    # -- recording -----------------------------------------------------------
    def _record(self, t):
        n = self._rec_n
        if n and self._rec[n - 1, 0] >= t - 1e-18:
            n -= 1  # same instant: keep the latest configuration only
        elif n == 0 and self._chunks and self._chunks[-1][0][-1, 0] >= t - 1e-18:
            rows, cfgs = self._chunks[-1]
            rows[-1, 1:] = self.xe[:N_STATE]
            cfgs[-1] = self.config
            return
        self._ensure(n + 1)
        self._rec[n, 0] = t
        self._rec[n, 1:] = self.xe[:N_STATE]
        self._rec_cfg[n] = self.config
        self._rec_n = n + 1

    def _ensure(self, need):
        if need > len(self._rec):
            grow = max(need, 2 * len(self._rec))
            rec = np.empty((grow, 1 + N_STATE))
            rec[:self._rec_n] = self._rec[:self._rec_n]
            cfg = np.empty(grow, dtype=np.int16)
            cfg[:self._rec_n] = self._rec_cfg[:self._rec_n]
            self._rec, self._rec_cfg = rec, cfg

    def _flush(self):
        n = self._rec_n
        if n:
            self._chunks.append((self._rec[:n].copy(), self._rec_cfg[:n].copy()))
        self._rec_n = 0

    # -- bookkeeping shared by kernel and partial steps ----------------------
    def _accumulate(self, x_old, x_new, h):
        vo_o = x_old[5] + x_old[7] + x_old[8]
        vo_n = x_new[5] + x_new[7] + x_new[8]
        self._acc[:N_STATE] += 0.5 * h * (x_old[:N_STATE] + x_new[:N_STATE])
        self._acc[N_STATE] += 0.5 * h * (vo_o * vo_o + vo_n * vo_n)
        np.maximum(self._mon_max, self.net.monitor_rows(self.config) @ x_new, out=self._mon_max)
        self._mode_time[mode_of(self.config) - 1] += h

    def _check_state(self):
        if not np.all(np.isfinite(self.xe)):
            raise NonFiniteStateError(f"non-finite state at t = {self.t:.9g} s")
        mon = self._mon_max
        worst = max(mon[14:20])
        if worst > self.cfg.constraint_tol:
            raise ConstraintDriftError(
                f"capacitor-loop residual {worst:.4g} V exceeds constraint_tol "
                f"{self.cfg.constraint_tol:g} V near t = {self.t:.9g} s (mode {mode_of(self.config)})")

    def _check_ccm(self):
        c = self.config
        if q_on(c) and not diode_on(c, 2) or not q_on(c) and not diode_on(c, 1):
            which = "D2" if q_on(c) else "D1"
            raise DCMError(
                f"DCM encountered: {which} current reached zero at t = {self.t:.9g} s "
                f"(mode {mode_of(c)}, i_L1 = {self.xe[0]:.4g} A)")

    def _change_config(self, new_cfg, cause_hint):
        old_mode = mode_of(self.config)
        self.config = new_cfg
        self._check_ccm()
        new_mode = mode_of(new_cfg)
        if new_mode != old_mode:
            if cause_hint is not None:
                cause = cause_hint
            elif old_mode == 1 and new_mode == 2:
                cause = "d5-current-zero"
            elif old_mode == 3 and new_mode == 4:
                cause = "d6-current-zero"
            elif new_mode == 1:
                cause = "d5-turn-on"
            else:
                cause = "d6-turn-on"
            ev = ModeEvent(self.t, old_mode, new_mode, cause)
            self.events.append(ev)
            self._causes.append(ev)
        self._record(self.t)

    # -- events --------------------------------------------------------------
    def _handle_event(self, hmax):
        h, mask = kernel.locate(self.xe, self.net.taylor(self.config),
                                self.net.event_rows(self.config), hmax, self.tol, 1e-12 * self.dt)
        x_new = self.net.step(self.config, self.xe, h)
        self._accumulate(self.xe, x_new, h)
        self.xe = x_new
        self.t += h
        self.step_count += 1
        if h < 1e-9 * self.dt:
            self._zeno += 1
            if self._zeno > 50:
                raise ChatterError(f"diode chatter near t = {self.t:.9g} s (mode {mode_of(self.config)})")
        else:
            self._zeno = 0
        cfg = self.config
        cfg ^= int(mask) << 1
        cfg = self.net.resolve(cfg, self.xe, self.tol)
        self._change_config(cfg, None)

    # -- segments ------------------------------------------------------------
    def _segment(self, t_end):
        dt = self.dt
        while True:
            remaining = t_end - self.t
            if remaining <= 1e-9 * dt:
                self.t = t_end
                return
            n_full = int(math.floor(remaining / dt + 1e-9))
            if n_full > 0:
                self._ensure(self._rec_n + n_full // self.cfg.record_stride + 2)
                start = self._rec_n
                done, status, rec_n = kernel.advance(
                    self.xe, self.net.phi(self.config, dt), self.net.event_rows(self.config),
                    self.net.monitor_rows(self.config), n_full, self.t, dt,
                    self.cfg.record_stride, self.step_count, self._rec, self._rec_n,
                    self._mon_max, self._acc)
                self._rec_cfg[start:rec_n] = self.config
                self._rec_n = rec_n
                self._mode_time[mode_of(self.config) - 1] += done * dt
                self.step_count += done
                self.t += done * dt
                if done:
                    self._zeno = 0
                self._check_state()
                if status == kernel.STATUS_EVENT:
                    self._handle_event(min(dt, t_end - self.t))
                elif status == kernel.STATUS_NONFINITE:
                    raise NonFiniteStateError(f"non-finite state at t = {self.t:.9g} s")
            else:
                h = remaining
                x_new = self.net.step(self.config, self.xe, h)
                g_rows = self.net.event_rows(self.config)
                g0, g1 = g_rows @ self.xe, g_rows @ x_new
                if np.any((g1 < 0.0) & (g1 < g0)):
                    self._handle_event(h)
                    continue
                self._accumulate(self.xe, x_new, h)
                self.xe = x_new
                self.step_count += 1
                self.t = t_end
                self._check_state()
                return

    def _clock(self, q: bool):
        cfg = (self.config & ~1) | int(q)
        if q:
            cfg |= 1 << 2  # D2 picks up the L1 current
        else:
            cfg |= 1 << 1  # D1 does
        cfg = self.net.resolve(cfg, self.xe, self.tol)
        self._change_config(cfg, "switch-on" if q else "switch-off")

    def run_period(self, duty: float):
        """Advance one switching period starting at a switch-on instant."""
        if not 0.0 < duty < 1.0:
            raise ParameterError(f"duty must lie inside (0, 1), got {duty}")
        ts = self.p.ts
        k = len(self._per["t0"])
        t0 = k * ts if self.t <= k * ts + 1e-9 * self.dt else self.t
        self.t = t0
        self._acc = np.zeros(N_STATE + 1)
        self._mon_max = np.full(N_MON, -np.inf)
        self._mode_time = np.zeros(4)
        self._causes: list[ModeEvent] = []
        self._zeno = 0
        x0 = self.xe[:N_STATE].copy()
        self._clock(True)
        self._segment(t0 + duty * ts)
        self._clock(False)
        self._segment(t0 + ts)
        per = self._per
        per["t0"].append(t0)
        per["x0"].append(x0)
        per["mx"].append(self._acc[:N_STATE] / ts)
        per["vo2"].append(self._acc[N_STATE] / ts)
        per["mx_mon"].append(self._mon_max.copy())
        per["duty"].append(duty)
        per["mt"].append(self._mode_time.copy())
        per["causes"].append(self._causes)
        self._flush()
        return per["mx"][-1]

    def state(self) -> State:
        return State.from_array(self.xe[:N_STATE], mode=mode_of(self.config), t=self.t)

    def trace(self) -> Trace:
        self._flush()
        rows = np.vstack([c[0] for c in self._chunks])
        cfgs = np.concatenate([c[1] for c in self._chunks]).astype(np.int16)
        per = self._per
        n = len(per["t0"])
        x0 = np.array(per["x0"] + [self.xe[:N_STATE].copy()]).reshape(n + 1, N_STATE)
        return Trace(
            params=self.p, dt=self.dt, t=rows[:, 0].copy(), x=rows[:, 1:].copy(), config=cfgs,
            period_t0=np.array(per["t0"]), period_x0=x0,
            period_mean_x=np.array(per["mx"]).reshape(n, N_STATE),
            period_mean_vo2=np.array(per["vo2"]),
            period_max=np.array(per["mx_mon"]).reshape(n, N_MON),
            period_duty=np.array(per["duty"]),
            period_mode_time=np.array(per["mt"]).reshape(n, 4),
            period_causes=list(per["causes"]),
        )


def warm_start(params: ConverterParams, valley: bool = True) -> State:
    """Analytic steady state as initial condition, mode 1 at t = 0.

    Capacitor voltages take their closed-form averages. The L3 current is
    centred on the output current, its period average in the switched
    circuit (charge balance of the multiplier capacitors). With ``valley``
    the inductor currents are moved from their averages to the start of the
    on-interval, half a linear ripple lower, which is where the periodic
    orbit actually passes at t = 0; this avoids exciting the slow LC mode.
    """
    if params.vin == 0.0:
        return State()
    d = params.duty
    i_o = gain_ccm(d) * params.vin / params.r_load
    op = steady_state_point(params.vin, d, i_o)
    i_l = np.array([op.i_l1, op.i_l2, i_o])
    if valley:
        # on-interval inductor voltages: vin, v_C1 and v_C3 - v_C2 (= v_C1)
        v_on = np.array([params.vin, op.v_c1, op.v_c3 - op.v_c2])
        i_l -= 0.5 * v_on * d * params.ts / np.array(params.inductances)
    return State(*i_l, op.v_c1, op.v_c2, op.v_c3, op.v_c4, op.v_c5, op.v_c6, mode=1, t=0.0)


def period_map(params: ConverterParams, x: np.ndarray, config: SimConfig | None = None,
               duty: float | None = None) -> np.ndarray:
    """State after one switching period started at switch-on from ``x``."""
    config = config or SimConfig()
    eng = _Engine(params, replace(config, record_stride=1 << 30),
                  State.from_array(np.asarray(x, dtype=float), mode=1, t=0.0))
    eng.run_period(params.duty if duty is None else duty)
    return eng.xe[:N_STATE].copy()


def periodic_orbit(params: ConverterParams, config: SimConfig | None = None,
                   rtol: float = 1e-8, max_iter: int = 40) -> State:
    """Switch-on state of the periodic orbit, found by shooting.

    Damped Newton iteration on ``P(x) - x`` with a forward-difference
    Jacobian of the period map ``P``, starting from the analytic warm start.
    Steps are capped at 5 % of the state magnitude and halved until the
    residual drops, since the diode conduction pattern (and so the
    linearisation) changes away from the orbit. The lightly damped LC modes
    make plain time stepping take thousands of periods to settle; shooting
    needs a few hundred period evaluations.
    """
    config = config or SimConfig()
    x = warm_start(params).as_array()
    mag = np.maximum(np.abs(x), 1.0)

    def resid(z):
        try:
            return period_map(params, z, config) - z
        except SimulationError:
            return None

    def size(r):
        return float(np.max(np.abs(r) / mag))

    def norm(r):
        return float(np.linalg.norm(r / mag))

    r = resid(x)
    if r is None:
        raise ShootingError("analytic start is not in continuous conduction")
    for _ in range(max_iter):
        if size(r) <= rtol:
            return State.from_array(x, mode=1, t=0.0)
        jac = np.empty((N_STATE, N_STATE))
        for i in range(N_STATE):
            h = 1e-4 * mag[i]
            xp = x.copy()
            xp[i] += h
            rp = resid(xp)
            if rp is None:
                xp[i] -= 2 * h
                rp = resid(xp)
                h = -h
            if rp is None:
                raise ShootingError("period map not differentiable at the current iterate")
            jac[:, i] = (rp - r) / h + (np.arange(N_STATE) == i)
        step = -np.linalg.solve(jac - np.eye(N_STATE), r)
        step *= min(1.0, 0.05 / max(size(step), 1e-300))
        for _ in range(20):
            r_new = resid(x + step)
            if r_new is not None and norm(r_new) < norm(r):
                x, r = x + step, r_new
                break
            step *= 0.5
        else:
            # kink in the period map: let time stepping carry the iterate
            for _ in range(50):
                x = x + r
                r = resid(x)
                if r is None:
                    raise ShootingError("left continuous conduction while relaxing")
    raise ShootingError(f"shooting did not converge in {max_iter} Newton steps "
                        f"(scaled residual {size(r):.3g})")


def simulate(params: ConverterParams, config: SimConfig | None = None,
             state: State | None = None) -> tuple[Trace, list[ModeEvent]]:
    """Run ``config.periods`` switching periods at the fixed duty ``params.duty``."""
    config = config or SimConfig()
    eng = _Engine(params, config, state)
    for _ in range(config.periods):
        eng.run_period(params.duty)
    return eng.trace(), eng.events


@dataclass(frozen=True)
class SteadyStateStatus:
    converged: bool
    period: int
    deltas: np.ndarray


def periodic_steady_state(trace: Trace, rtol: float = 1e-4) -> SteadyStateStatus:
    """Compare consecutive period-start states.

    ``deltas[k]`` is the per-state relative change from the start of period
    k to the start of period k + 1. ``period`` is the first period index
    from which every later change stays below ``rtol`` (or the last index if
    the trace never settles).
    """
    x0 = np.asarray(trace.period_x0)
    if len(x0) < 3:
        raise ParameterError("need at least two full periods")
    diff = np.abs(np.diff(x0, axis=0))
    scale = np.maximum(np.abs(x0[:-1]), 1e-9 + 1e-6 * np.max(np.abs(x0[:-1]), axis=1, keepdims=True))
    deltas = diff / scale
    worst = deltas.max(axis=1)
    ok = worst < rtol
    converged = bool(ok[-1])
    period = len(worst)
    if converged:
        bad = np.flatnonzero(~ok)
        period = int(bad[-1]) + 2 if len(bad) else 1
    return SteadyStateStatus(converged, period, deltas)


def balance_report(trace: Trace, window: int = 20) -> BalanceReport:
    """Volt-second and ampere-second residuals and the power mismatch.

    Period averages of ``L di/dt`` and ``C dv/dt`` reduce exactly to the net
    change of the state over the window divided by its length.
    """
    w = trace.window(window)
    n = w.stop - w.start
    p = trace.params
    x_a, x_b = trace.period_x0[w.start], trace.period_x0[w.stop]
    span = n * p.ts
    dx = (x_b - x_a) / span
    v_l = tuple(float(v) for v in dx[:3] * np.array(p.inductances))
    i_c = tuple(float(v) for v in dx[3:] * np.array(p.capacitances))
    p_in = float(p.vin * trace.period_mean_x[w, 0].mean())
    p_out = float(trace.period_mean_vo2[w].mean() / p.r_load)
    mismatch = (p_in - p_out) / p_in if p_in else 0.0
    return BalanceReport(v_l, i_c, mismatch, p_in, p_out, n)


def waveform_metrics(trace: Trace, window: int = 20) -> dict:
    """Means, ripples, device peaks and mode-time fractions over the last periods.

    Peak blocking voltages and currents come from every integration step,
    not only the recorded samples.
    """
    w = trace.window(window)
    mask = trace.sample_mask(window)
    mean_x = trace.period_mean_x[w].mean(axis=0)
    mean = {n: float(v) for n, v in zip(STATE_NAMES, mean_x)}
    mean["v_o"] = float(trace.period_mean_vo()[w].mean())
    mean["i_o"] = mean["v_o"] / trace.params.r_load
    ripple = {}
    for k, n in enumerate(STATE_NAMES):
        seg = trace.x[mask, k]
        ripple[n] = float(seg.max() - seg.min()) if len(seg) else 0.0
    vo = trace.v_o[mask]
    ripple["v_o"] = float(vo.max() - vo.min()) if len(vo) else 0.0
    peaks = trace.period_max[w].max(axis=0)
    peak = {MON_NAMES[k]: float(peaks[k]) for k in range(14)}
    mt = trace.period_mode_time[w].sum(axis=0)
    fractions = {f"mode{k + 1}": float(mt[k] / mt.sum()) for k in range(4)}
    return {"mean": mean, "ripple": ripple, "peak": peak, "mode_fraction": fractions,
            "periods": w.stop - w.start}


def mode_sequences(trace: Trace) -> list[tuple[tuple[int, str], ...]]:
    """Per-period list of (to-mode, cause) transitions."""
    return [tuple((e.to_mode, e.cause) for e in evs) for evs in trace.period_causes]
