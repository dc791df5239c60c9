import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hgvm_qbc.comparator import crossover, duty_grid, get_topology, sweep, topology_catalog
from hgvm_qbc.errors import ParameterError


def test_catalog_counts():
    cat = {t.key: t for t in topology_catalog()}
    assert len(cat) == 7
    h = cat["hgvm-qbc"]
    assert (h.switches, h.diodes, h.capacitors, h.inductors) == (1, 6, 6, 3)
    assert (cat["ref31"].switches, cat["ref32"].switches) == (2, 2)


def test_reference_values():
    assert get_topology("hgvm-qbc").gain(0.5) == pytest.approx(10.0)
    assert get_topology("ref28").gain(0.5) == pytest.approx(8.0)
    assert get_topology("ref31").gain(0.5) == pytest.approx(6.0)
    assert get_topology("ref27").gain(0.55) == pytest.approx(9.382, abs=1e-3)


def test_crossover_with_ref32_is_exact():
    # (2 + D)/(1 - D)^2 = 4/(1 - D)  <=>  D = 0.4
    roots = crossover("hgvm-qbc", "ref32", "gain")
    assert len(roots) == 1 and roots[0] == pytest.approx(0.4, abs=1e-9)


def test_crossover_with_ref31_root():
    # (2+D) D = (1+D)(1-D)  <=>  2D^2 + 2D - 1 = 0
    root = (-1 + np.sqrt(3)) / 2
    assert crossover("hgvm-qbc", "ref31", "gain") == [pytest.approx(root, abs=1e-9)]


@given(st.sampled_from([t.key for t in topology_catalog()]))
def test_gain_diverges_at_unity(key):
    t = get_topology(key)
    assert t.gain(0.999) > 100 * t.gain(0.5) / 50
    assert t.gain(0.999) > t.gain(0.9)


def test_ref31_diverges_at_zero():
    assert get_topology("ref31").gain(1e-4) > 1e3


def test_sweep_shape_and_flags():
    tab = sweep(0.1, 0.8, 0.05)
    assert tab.gain.shape == (7, 15) == tab.switch_stress.shape == tab.diode_stress.shape
    assert tab.off_scale[tab.keys.index("ref27")].any()
    assert not tab.off_scale[tab.keys.index("hgvm-qbc")].any()
    assert np.all(tab.switch_stress >= 0) and np.all(tab.diode_stress >= 0)


def test_duty_grid():
    g = duty_grid(0.1, 0.8, 0.05)
    assert g[0] == 0.1 and g[-1] == 0.8 and len(g) == 15
    with pytest.raises(ParameterError):
        duty_grid(0.8, 0.1, 0.05)
    with pytest.raises(ParameterError):
        crossover("hgvm-qbc", "ref31", "weight")
