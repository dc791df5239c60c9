"""Switched linear network of the converter.

Every switch/diode combination (a *configuration*) turns the circuit into a
linear network. Modified nodal analysis of that network, with the inductor
currents and capacitor voltages as known sources, gives an affine map from
the augmented state ``xe = [x, 1]`` to all node voltages, hence to the state
derivative and to every device current and voltage.

Conducting semiconductors are small resistors, blocking ones are open. This
keeps the capacitor loops closed by the diodes well posed: the loop charge
sharing that ideal devices would force into impulses becomes a fast but
finite exchange current.

Configuration encoding: bit 0 is the switch, bit k (1..6) is diode Dk.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import ChatterError, ParameterError, SingularClosureError
from .model import N_STATE, ConverterParams, State

NODES = ("in", "a", "b", "s", "p", "w", "v", "y", "t")
_IDX = {n: i for i, n in enumerate(NODES)}
_IDX["0"] = -1

# positive current flows first -> second
INDUCTORS = (("in", "a"), ("b", "s"), ("p", "w"))
# (+, -) terminals
CAPACITORS = (("b", "0"), ("w", "s"), ("p", "0"), ("y", "w"), ("t", "v"), ("v", "p"))
# anode -> cathode
DIODES = (("a", "b"), ("a", "s"), ("s", "p"), ("w", "v"), ("v", "y"), ("y", "t"))
SWITCH = ("s", "0")
LOAD = ("t", "0")

GMIN = 1e-9

# rows of the output map
OUT_NAMES = (
    "i_d1", "i_d2", "i_d3", "i_d4", "i_d5", "i_d6",
    "v_d1", "v_d2", "v_d3", "v_d4", "v_d5", "v_d6",
    "i_q", "v_q", "i_o", "v_o",
    "v_l1", "v_l2", "v_l3",
    "i_c1", "i_c2", "i_c3", "i_c4", "i_c5", "i_c6",
)
OUT = {n: i for i, n in enumerate(OUT_NAMES)}

# monitored per-step maxima
MON_NAMES = (
    "v_q", "vr_d1", "vr_d2", "vr_d3", "vr_d4", "vr_d5", "vr_d6",
    "i_d1", "i_d2", "i_d3", "i_d4", "i_d5", "i_d6", "i_q",
    "loop1+", "loop1-", "loop2+", "loop2-", "loop3+", "loop3-",
)
N_MON = len(MON_NAMES)

N_CONFIGS = 128


def q_on(cfg: int) -> bool:
    return bool(cfg & 1)


def diode_on(cfg: int, k: int) -> bool:
    """k is 1-based."""
    return bool(cfg >> k & 1)


def make_config(q: bool, diodes) -> int:
    cfg = int(bool(q))
    for k, on in enumerate(diodes, start=1):
        if on:
            cfg |= 1 << k
    return cfg


def mode_of(cfg: int) -> int:
    """Operating-mode label of a configuration.

    1 and 2 are the on-interval with D5 conducting or not, 3 and 4 the
    off-interval with D6 conducting or not.
    """
    if q_on(cfg):
        return 1 if diode_on(cfg, 5) else 2
    return 3 if diode_on(cfg, 6) else 4


def loop_residual_rows(cfg: int) -> np.ndarray:
    """Capacitor-loop residuals that ideal conducting devices would pin to zero.

    Returned as a (3, 10) affine map on ``xe``; inactive loops are zero rows.
    """
    r = np.zeros((3, N_STATE + 1))
    # loop C2-C4-D5-C6-C3 closed by the switch
    if q_on(cfg) and diode_on(cfg, 5):
        r[0, [4, 6]] = 1.0
        r[0, [5, 8]] = -1.0
    if diode_on(cfg, 4) and diode_on(cfg, 6):
        r[1, 6], r[1, 7] = 1.0, -1.0
    if diode_on(cfg, 3) and diode_on(cfg, 4):
        r[2, 4], r[2, 8] = 1.0, -1.0
    return r


class Network:
    """Per-configuration affine maps of one parameter set, built lazily."""

    def __init__(self, params: ConverterParams):
        self.params = params
        self._maps: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._phi: dict[tuple[int, float], np.ndarray] = {}
        self._taylor: dict[int, np.ndarray] = {}
        self._event: dict[int, np.ndarray] = {}
        self._mon: dict[int, np.ndarray] = {}

    # -- assembly -----------------------------------------------------------
    def _assemble(self, cfg: int):
        p = self.params
        nn, nc = len(NODES), len(CAPACITORS)
        n = nn + nc + 1
        m = np.zeros((n, n))
        rhs = np.zeros((n, N_STATE + 1))

        def stamp(a, b, g):
            ia, ib = _IDX[a], _IDX[b]
            if ia >= 0:
                m[ia, ia] += g
            if ib >= 0:
                m[ib, ib] += g
            if ia >= 0 and ib >= 0:
                m[ia, ib] -= g
                m[ib, ia] -= g

        m[np.arange(nn), np.arange(nn)] += GMIN
        g_d = [1.0 / p.r_on] * 3 + [1.0 / p.r_on_vmc] * 3
        for k, (a, b) in enumerate(DIODES):
            if diode_on(cfg, k + 1):
                stamp(a, b, g_d[k])
        if q_on(cfg):
            stamp(*SWITCH, 1.0 / p.r_on)
        stamp(*LOAD, 1.0 / p.r_load)
        for k, (a, b) in enumerate(INDUCTORS):
            if _IDX[a] >= 0:
                rhs[_IDX[a], k] -= 1.0
            if _IDX[b] >= 0:
                rhs[_IDX[b], k] += 1.0
        # capacitor voltage sources; their branch currents are unknowns
        for k, (a, b) in enumerate(CAPACITORS):
            row = nn + k
            ia, ib = _IDX[a], _IDX[b]
            if ia >= 0:
                m[ia, row] += 1.0
                m[row, ia] += 1.0
            if ib >= 0:
                m[ib, row] -= 1.0
                m[row, ib] -= 1.0
            rhs[row, 3 + k] = 1.0
        # input source
        row = nn + nc
        m[_IDX["in"], row] += 1.0
        m[row, _IDX["in"]] += 1.0
        rhs[row, N_STATE] = p.vin

        try:
            sol = np.linalg.solve(m, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - tree of capacitors
            raise SingularClosureError(f"singular network in configuration {cfg}") from exc

        zero = np.zeros(N_STATE + 1)

        def node(name):
            return zero if name == "0" else sol[_IDX[name]]

        v_l = np.array([node(a) - node(b) for a, b in INDUCTORS])
        # branch current of each capacitor source, entering its + terminal
        i_c = sol[nn:nn + nc]
        a_mat = np.vstack([v_l / np.array(p.inductances)[:, None],
                           i_c / np.array(p.capacitances)[:, None]])

        v_d = np.array([node(a) - node(b) for a, b in DIODES])
        i_d = np.array([v_d[k] * g_d[k] if diode_on(cfg, k + 1) else zero
                        for k in range(6)])
        v_q = node("s")
        i_q = v_q / p.r_on if q_on(cfg) else zero
        v_o = node("t")
        y = np.vstack([i_d, v_d, i_q, v_q, v_o / p.r_load, v_o, v_l, i_c])
        return a_mat, y

    def maps(self, cfg: int) -> tuple[np.ndarray, np.ndarray]:
        """(A, Y): ``dx/dt = A @ xe`` and ``outputs = Y @ xe``."""
        if cfg not in self._maps:
            self._maps[cfg] = self._assemble(cfg)
        return self._maps[cfg]

    # -- integration helpers ------------------------------------------------
    def augmented(self, cfg: int) -> np.ndarray:
        a = np.zeros((N_STATE + 1, N_STATE + 1))
        a[:N_STATE] = self.maps(cfg)[0]
        return a

    def taylor(self, cfg: int) -> np.ndarray:
        """Stack ``T_j = A^j / j!`` for j = 0..4 (classic RK4 on a linear system)."""
        if cfg not in self._taylor:
            a = self.augmented(cfg)
            terms = [np.eye(N_STATE + 1)]
            for j in range(1, 5):
                terms.append(terms[-1] @ a / j)
            self._taylor[cfg] = np.array(terms)
        return self._taylor[cfg]

    def phi(self, cfg: int, h: float) -> np.ndarray:
        """One RK4 step of length h as a matrix acting on ``xe``."""
        key = (cfg, h)
        mat = self._phi.get(key)
        if mat is None:
            t = self.taylor(cfg)
            mat = sum(t[j] * h ** j for j in range(5))
            self._phi[key] = np.ascontiguousarray(mat)
        return mat

    def step(self, cfg: int, xe: np.ndarray, h: float) -> np.ndarray:
        t = self.taylor(cfg)
        out = t[4] @ xe
        for j in (3, 2, 1, 0):
            out = t[j] @ xe + h * out
        return out

    def event_rows(self, cfg: int) -> np.ndarray:
        """Event functions, nonnegative while the configuration is consistent.

        Current for conducting diodes, minus the forward voltage for blocking ones.
        """
        g = self._event.get(cfg)
        if g is None:
            y = self.maps(cfg)[1]
            g = np.array([y[k] if diode_on(cfg, k + 1) else -y[6 + k] for k in range(6)])
            self._event[cfg] = g = np.ascontiguousarray(g)
        return g

    def monitor_rows(self, cfg: int) -> np.ndarray:
        mon = self._mon.get(cfg)
        if mon is None:
            y = self.maps(cfg)[1]
            r = loop_residual_rows(cfg)
            mon = np.vstack([y[OUT["v_q"]], -y[6:12], y[0:6], y[OUT["i_q"]],
                             r[0], -r[0], r[1], -r[1], r[2], -r[2]])
            self._mon[cfg] = mon = np.ascontiguousarray(mon)
        return mon

    # -- configuration resolution -------------------------------------------
    def violations(self, cfg: int, xe: np.ndarray, tol: float) -> np.ndarray:
        """Amount by which each diode violates its complementarity condition."""
        g = self.event_rows(cfg) @ xe
        return np.where(g < -tol, -g, 0.0)

    def resolve(self, cfg: int, xe: np.ndarray, tol: float, fixed=()) -> int:
        """Find a configuration whose diode states agree with the state ``xe``.

        Starts from ``cfg`` and flips the worst offender until consistent;
        falls back to trying every diode combination. Diodes listed in
        ``fixed`` (1-based) keep their state.
        """
        seen = set()
        cur = cfg
        for _ in range(32):
            viol = self.violations(cur, xe, tol)
            for k in fixed:
                viol[k - 1] = 0.0
            if not viol.any():
                return cur
            seen.add(cur)
            k = int(np.argmax(viol)) + 1
            cur ^= 1 << k
            if cur in seen:
                break
        best, best_v = None, math.inf
        q = cfg & 1
        for bits in itertools.product((0, 1), repeat=6):
            cand = make_config(q, bits)
            if any(diode_on(cand, k) != diode_on(cfg, k) for k in fixed):
                continue
            v = self.violations(cand, xe, tol)
            for k in fixed:
                v[k - 1] = 0.0
            total = v.sum()
            if total == 0.0:
                return cand
            if total < best_v:
                best, best_v = cand, total
        raise ChatterError(
            f"no consistent diode configuration (switch {'on' if q else 'off'}); "
            f"least violation {best_v:.3g} in configuration {best}")


_MODE_FORCED = {1: (True, 5, True), 2: (True, 5, False), 3: (False, 6, True), 4: (False, 6, False)}


def mode_derivative(mode: int, state: State, params: ConverterParams, tol: float = 1e-9):
    """State derivative in a given operating mode plus the mode's algebraic currents.

    The mode fixes the switch and the D5 (modes 1, 2) or D6 (modes 3, 4)
    state; the remaining diodes are resolved from the state. Returns
    ``(dxdt, currents)`` where ``currents`` holds ``i_d5`` in mode 1 and
    ``i_d4``/``i_d6`` in mode 3 (empty otherwise).
    """
    if mode not in _MODE_FORCED:
        raise ParameterError(f"mode must be 1..4, got {mode}")
    x = state.as_array()
    if not np.all(np.isfinite(x)):
        raise ParameterError("state must be finite")
    q, k, on = _MODE_FORCED[mode]
    net = Network(params)
    guess = [False, q, False, False, q, not q]
    guess[k - 1] = on
    if not q:
        guess[0] = True
    xe = np.append(x, 1.0)
    cfg = net.resolve(make_config(q, guess), xe, tol, fixed=(k,))
    a, y = net.maps(cfg)
    dx = a @ xe
    out = y @ xe
    if mode == 1:
        currents = {"i_d5": float(out[OUT["i_d5"]])}
    elif mode == 3:
        currents = {"i_d4": float(out[OUT["i_d4"]]), "i_d6": float(out[OUT["i_d6"]])}
    else:
        currents = {}
    return dx, currents
