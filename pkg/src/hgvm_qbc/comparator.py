"""Closed-form comparison of the converter against six related topologies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError

OFF_SCALE = 3.0  # diode stress above 3 V_o is flagged, not plotted
METRICS = ("gain", "switch-stress", "diode-stress-max")

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TopologyModel:
    """Gain and device stresses (as fractions of V_o) of one topology.

    Stress expressions are evaluated verbatim and reported as magnitudes.
    """

    key: str
    name: str
    switches: int
    diodes: int
    capacitors: int
    inductors: int
    gain: Fn
    switch_stress: tuple[Fn, ...]
    diode_stress: tuple[Fn, ...]

    def switch_stresses(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        return np.abs(np.array([np.broadcast_to(f(d), d.shape) for f in self.switch_stress]))

    def diode_stresses(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        return np.abs(np.array([np.broadcast_to(f(d), d.shape) for f in self.diode_stress]))

    def max_switch_stress(self, d) -> np.ndarray:
        return self.switch_stresses(d).max(axis=0)

    def max_diode_stress(self, d) -> np.ndarray:
        return self.diode_stresses(d).max(axis=0)

    def metric(self, name: str, d) -> np.ndarray:
        if name == "gain":
            return self.gain(np.asarray(d, dtype=float))
        if name == "switch-stress":
            return self.max_switch_stress(d)
        if name == "diode-stress-max":
            return self.max_diode_stress(d)
        raise ParameterError(f"unknown metric {name!r}; expected one of {METRICS}")


def _const(c):
    return lambda d: np.full_like(d, c, dtype=float)


def topology_catalog() -> list[TopologyModel]:
    """The seven topologies of the comparison table, proposed converter first."""
    def m27(d):
        return 3 - 2 * d

    def m29(d):
        return 1 + 2 * d - 2 * d * d

    return [
        TopologyModel(
            "hgvm-qbc", "HGVM-QBC", 1, 6, 6, 3,
            lambda d: (2 + d) / (1 - d) ** 2,
            (lambda d: 1 / (2 + d),),
            (lambda d: (1 - d) / (2 + d), lambda d: d / (2 + d), lambda d: 1 / (2 + d)),
        ),
        TopologyModel(
            "qbc", "Conventional QBC", 1, 3, 2, 2,
            lambda d: 1 / (1 - d) ** 2,
            (lambda d: 1 / (1 - d),),
            (lambda d: 1 / (1 - d), _const(1.0)),
        ),
        TopologyModel(
            "ref27", "[27]", 2, 3, 3, 2,
            lambda d: m27(d) / (1 - d) ** 2,
            (lambda d: (1 - d) ** 3 / m27(d), lambda d: (1 - d) ** 2 / m27(d),
             lambda d: (1 - d) / m27(d)),
            (lambda d: (1 - d) / m27(d), lambda d: (3 * d - 8) / m27(d),
             lambda d: (-6 * d ** 3 + 19 * d ** 2 - 18 * d + 9) / (2 * d ** 3 - 5 * d ** 2 + 3 * d)),
        ),
        TopologyModel(
            "ref28", "[28]", 2, 4, 3, 2,
            lambda d: 2 / (1 - d) ** 2,
            (_const(0.5), lambda d: (1 - d) / 2),
            (lambda d: d / 2,),
        ),
        TopologyModel(
            "ref29", "[29]", 1, 5, 6, 4,
            lambda d: m29(d) / (1 - d) ** 2,
            (lambda d: 1 / m29(d),),
            (lambda d: (1 - d) / m29(d), lambda d: d / m29(d), lambda d: d * d / m29(d)),
        ),
        TopologyModel(
            "ref31", "[31]", 2, 3, 3, 2,
            lambda d: (1 + d) / (d * (1 - d)),
            (lambda d: d / (1 + d), lambda d: 1 / (1 + d)),
            (lambda d: d / (1 + d), _const(1.0)),
        ),
        TopologyModel(
            "ref32", "[32]", 2, 4, 4, 2,
            lambda d: 4 / (1 - d),
            (_const(0.25),),
            (_const(0.5), _const(0.25)),
        ),
    ]


def get_topology(key: str) -> TopologyModel:
    for t in topology_catalog():
        if t.key == key or t.name == key:
            return t
    raise ParameterError(f"unknown topology {key!r}")


@dataclass(frozen=True)
class SweepTable:
    duty: np.ndarray
    keys: tuple[str, ...]
    gain: np.ndarray           # (n_topologies, n_duty)
    switch_stress: np.ndarray  # max over switches, fraction of V_o
    diode_stress: np.ndarray   # max over diodes, fraction of V_o
    off_scale: np.ndarray      # diode stress beyond OFF_SCALE

    def column(self, metric: str, key: str) -> np.ndarray:
        i = self.keys.index(key)
        return {"gain": self.gain, "switch-stress": self.switch_stress,
                "diode-stress-max": self.diode_stress}[metric][i]


def duty_grid(d_min: float, d_max: float, step: float) -> np.ndarray:
    if not (0.0 < d_min < d_max < 1.0) or not step > 0:
        raise ParameterError("need 0 < d_min < d_max < 1 and step > 0")
    n = int(np.floor((d_max - d_min) / step + 1e-9))
    return np.round(d_min + step * np.arange(n + 1), 12)


def sweep(d_min: float, d_max: float, step: float) -> SweepTable:
    d = duty_grid(d_min, d_max, step)
    cat = topology_catalog()
    gain = np.array([t.gain(d) for t in cat])
    sw = np.array([t.max_switch_stress(d) for t in cat])
    di = np.array([t.max_diode_stress(d) for t in cat])
    return SweepTable(d, tuple(t.key for t in cat), gain, sw, di, di > OFF_SCALE)


def crossover(topo_a: str, topo_b: str, metric: str = "gain",
              grid_step: float = 1e-4, lo: float = 0.01, hi: float = 0.99) -> list[float]:
    """Duty ratios where two metric curves intersect.

    Sign changes of the difference on a uniform grid, each refined by bisection.
    """
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}; expected one of {METRICS}")
    a, b = get_topology(topo_a), get_topology(topo_b)

    def diff(d):
        return a.metric(metric, d) - b.metric(metric, d)

    grid = np.linspace(lo, hi, int(round((hi - lo) / grid_step)) + 1)
    f = diff(grid)
    roots = []
    for i in np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0):
        x0, x1 = grid[i], grid[i + 1]
        f0 = f[i]
        for _ in range(60):
            xm = 0.5 * (x0 + x1)
            fm = float(diff(np.array([xm]))[0])
            if np.sign(fm) == np.sign(f0):
                x0, f0 = xm, fm
            else:
                x1 = xm
        roots.append(float(0.5 * (x0 + x1)))
    # exact zeros on grid points
    roots += [float(grid[i]) for i in np.flatnonzero(f == 0.0)]
    return sorted(roots)
