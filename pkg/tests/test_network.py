import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hgvm_qbc.errors import ParameterError
from hgvm_qbc.model import DESIGN_POINT, State
from hgvm_qbc.network import OUT, Network, diode_on, make_config, mode_of, mode_derivative, q_on

NET = Network(DESIGN_POINT)
configs = st.integers(0, 127)
states = st.lists(st.floats(-50, 200), min_size=9, max_size=9).map(np.array)


def energy_rate(p, cfg, x):
    xe = np.append(x, 1.0)
    dx = NET.maps(cfg)[0] @ xe
    l = np.array(p.inductances)
    c = np.array(p.capacitances)
    return float(np.sum(l * x[:3] * dx[:3]) + np.sum(c * x[3:] * dx[3:]))


@given(configs, states)
def test_network_is_passive(cfg, x):
    # stored energy can only grow by what the source delivers through L1
    p = DESIGN_POINT
    scale = 1e-9 * (1 + np.abs(x).max()) ** 2 * 1e3
    assert energy_rate(p, cfg, x) <= p.vin * x[0] + scale


@given(configs, states)
def test_output_voltage_is_capacitor_stack(cfg, x):
    y = NET.maps(cfg)[1] @ np.append(x, 1.0)
    assert y[OUT["v_o"]] == pytest.approx(x[5] + x[7] + x[8], abs=1e-9)
    assert y[OUT["i_o"]] == pytest.approx(y[OUT["v_o"]] / DESIGN_POINT.r_load, rel=1e-12, abs=1e-12)


@given(configs)
def test_config_encoding_roundtrip(cfg):
    q = q_on(cfg)
    assert make_config(q, [diode_on(cfg, k) for k in range(1, 7)]) == cfg
    assert mode_of(cfg) in ((1, 2) if q else (3, 4))


# configurations met in continuous conduction (modes 1-4)
NOMINAL = [
    make_config(True, [False, True, False, False, True, False]),
    make_config(True, [False, True, False, False, False, False]),
    make_config(False, [True, False, False, True, False, True]),
    make_config(False, [True, False, True, False, False, False]),
]


@given(st.sampled_from(NOMINAL), st.floats(1e-9, 2e-8))
def test_rk4_matrix_matches_exponential(cfg, h):
    a = NET.augmented(cfg)
    # truncated series to high order as the reference propagator
    ref, term = np.eye(10), np.eye(10)
    for j in range(1, 25):
        term = term @ (a * h) / j
        ref = ref + term
    err = np.abs(NET.phi(cfg, h) - ref).max()
    assert err <= 1e-6 * max(1.0, (np.abs(a).max() * h) ** 5)
    xe = np.append(np.linspace(1, 9, 9), 1.0)
    np.testing.assert_allclose(NET.step(cfg, xe, h), NET.phi(cfg, h) @ xe, rtol=1e-12, atol=1e-12)


def test_mode_derivative_inductor_voltages():
    op_x = np.array([16.0, 5.9, 1.3, 26.67, 32.59, 59.26, 59.26, 59.26, 32.59])
    st_ = State.from_array(op_x)
    p = DESIGN_POINT
    dx, cur = mode_derivative(2, st_, p)
    # on-interval with D5 off: L1 sees vin, L2 sees vC1
    # exact up to the conduction drops of the 1 mOhm devices
    assert dx[0] * p.l1 == pytest.approx(p.vin, abs=0.1)
    assert dx[1] * p.l2 == pytest.approx(op_x[3], abs=0.1)
    assert cur == {}
    dx4, _ = mode_derivative(4, st_, p)
    assert dx4[0] * p.l1 == pytest.approx(p.vin - op_x[3], abs=0.1)
    with pytest.raises(ParameterError):
        mode_derivative(5, st_, p)


def test_resolve_finds_consistent_configuration():
    x = np.append(np.array([16.0, 5.9, 1.3, 26.67, 32.59, 59.26, 59.26, 59.26, 32.59]), 1.0)
    for q in (True, False):
        cfg = NET.resolve(make_config(q, [False] * 6), x, 1e-6)
        assert q_on(cfg) == q
        assert not NET.violations(cfg, x, 1e-6).any()
