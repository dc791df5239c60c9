import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hgvm_qbc.controller import (
    PiConfig, StepScenario, check_reachable, pi_update, run_closed_loop, step_metrics,
)
from hgvm_qbc.errors import ParameterError, UnreachableReferenceError
from hgvm_qbc.model import PROTOTYPE
from hgvm_qbc.simulator import SimConfig

CFG = PiConfig()


@given(st.floats(-1.0, 1.0), st.floats(-200, 200), st.floats(0.0, 1.0))
def test_pi_output_clamped(integ, err, bias):
    duty, _ = pi_update(integ, err, 2e-5, CFG, bias)
    assert CFG.duty_min <= duty <= CFG.duty_max


@given(st.floats(-200, 200))
def test_integrator_frozen_when_saturated(err):
    integ = 0.95  # command far above duty_max
    _, new = pi_update(integ, err, 2e-5, CFG, 0.0)
    assert new == integ


def test_integrator_moves_inside_limits():
    _, new = pi_update(0.3, 10.0, 2e-5, PiConfig(ki=0.5, feedforward=False))
    assert new == pytest.approx(0.3 + 0.5 * 10.0 * 2e-5)


def test_first_order_response_metrics():
    tau = 1e-3
    t = np.linspace(0, 0.05, 50001)
    v = 60 - 20 * np.exp(-t / tau)
    m = step_metrics(t, v, 60.0, 0.0, 0.05)
    # |v - 60| = 20 exp(-t/tau) <= 1.2  <=>  t >= tau ln(20/1.2)
    assert m.settling_time == pytest.approx(tau * math.log(20 / 1.2), abs=2e-6)
    assert m.overshoot == 0.0 and m.settled
    assert m.steady_state_error < 1e-6


def test_overshoot_and_unsettled():
    t = np.linspace(0, 1, 1001)
    v = 1 + 0.3 * np.sin(40 * t)
    m = step_metrics(t, v, 1.0, 0.0, 1.0)
    assert m.overshoot == pytest.approx(0.3, abs=1e-3)
    assert not m.settled and math.isnan(m.settling_time)
    assert m.to_dict()["settling_time"] is None


def test_scenario_shaping():
    sc = StepScenario(((0.0, 40.0), (0.05, 60.0)), 0.1)
    assert sc.reference(0.049) == 40.0 and sc.reference(0.05) == 60.0
    r = [sc.shaped(t, 0.01) for t in np.linspace(0.05, 0.06, 11)]
    assert r[0] == 40.0 and r[-1] == pytest.approx(60.0)
    assert np.all(np.diff(r) >= 0)
    assert sc.segments() == [(0.0, 0.05, 40.0), (0.05, 0.1, 60.0)]
    with pytest.raises(ParameterError):
        StepScenario(((0.01, 40.0),), 0.1)
    with pytest.raises(ParameterError):
        StepScenario(((0.0, 40.0), (0.2, 60.0)), 0.1)


def test_unreachable_reference():
    sc = StepScenario(((0.0, 40.0), (0.01, 1000.0)), 0.02)
    with pytest.raises(UnreachableReferenceError, match="unreachable reference"):
        check_reachable(12.0, sc, CFG)


def test_short_closed_loop_holds_reference():
    sc = StepScenario(((0.0, 50.0),), 0.01)
    res = run_closed_loop(PROTOTYPE, CFG, sc, SimConfig(record_stride=100))
    assert len(res.period_vo) == 500
    assert abs(res.period_vo[-1] - 50.0) < 0.5
    assert np.all((res.period_duty > CFG.duty_min) & (res.period_duty < CFG.duty_max))
