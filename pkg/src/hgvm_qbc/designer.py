"""Inverse design: duty ratio for a target gain and CCM/ripple sizing of passives."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

from .analysis import gain_ccm, steady_state_point
from .errors import BelowCriticalValueError, DesignError, GainUnreachableError
from .model import ConverterParams

THIN_MARGIN = 1.10


class ThinMarginWarning(UserWarning):
    """A chosen component sits within 10 % of its minimum."""


class LoadMismatchWarning(UserWarning):
    """The load resistance does not draw the design power at the design voltage."""


@dataclass(frozen=True)
class DesignSpec:
    vin: float
    vo_target: float
    po: float
    fs: float
    ripple_fraction_v: float = 0.10
    inductor_margin: float = 1.0

    def __post_init__(self):
        for name in ("vin", "vo_target", "po", "fs", "ripple_fraction_v", "inductor_margin"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DesignError(f"{name} must be a positive finite number, got {v!r}")
        if self.vo_target <= self.vin:
            raise DesignError("vo_target must exceed vin")
        if not self.ripple_fraction_v < 1.0:
            raise DesignError("ripple_fraction_v must lie inside (0, 1)")
        if self.inductor_margin < 1.0:
            raise DesignError("inductor_margin must be >= 1")


@dataclass(frozen=True)
class DesignResult:
    duty: float
    gain: float
    i_o: float
    l1_min: float
    l2_min: float
    l3_min: float
    c1_min: float
    c2_min: float
    c3_min: float
    c4_min: float
    c5_min: float
    c6_min: float
    dv_c1: float
    dv_c2: float
    dv_c3: float
    dv_c4: float
    dv_c5: float
    dv_c6: float
    spec: DesignSpec = field(repr=False)

    @property
    def l_min(self):
        return (self.l1_min, self.l2_min, self.l3_min)

    @property
    def c_min(self):
        return (self.c1_min, self.c2_min, self.c3_min, self.c4_min, self.c5_min, self.c6_min)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spec"] = asdict(self.spec)
        return d


def solve_duty(vin: float, vo: float) -> float:
    """Duty ratio giving ``vo`` from ``vin`` in CCM.

    Smaller root of ``M D^2 - (2M + 1) D + (M - 2) = 0``; the larger one is
    always above 1. ``M = 2`` is the boundary and returns exactly 0.
    """
    if not (vin > 0 and math.isfinite(vin) and math.isfinite(vo)):
        raise GainUnreachableError(f"invalid voltages vin={vin!r}, vo={vo!r}")
    m = vo / vin
    if m < 2.0:
        raise GainUnreachableError(f"gain {m:.6g} is below the minimum CCM gain of 2")
    if m == 2.0:
        return 0.0
    # (M - 2)/M is the product of the roots; this form avoids cancellation
    return 2.0 * (m - 2.0) / ((2.0 * m + 1.0) + math.sqrt(12.0 * m + 1.0))


def size_components(spec: DesignSpec) -> DesignResult:
    d = solve_duty(spec.vin, spec.vo_target)
    if d == 0.0:
        raise GainUnreachableError("gain of exactly 2 needs D = 0, outside the CCM interior")
    m = gain_ccm(d)
    vin, po, fs = spec.vin, spec.po, spec.fs
    i_o = po / spec.vo_target
    k = spec.inductor_margin
    l1 = k * vin ** 2 * d / (2.0 * po * fs)
    l2 = k * vin ** 2 * d / (2.0 * (1.0 - d) ** 2 * po * fs)
    l3 = k * vin ** 2 * d ** 2 * m / (2.0 * (1.0 - d) * (3.0 + d) * po * fs)

    op = steady_state_point(vin, d, i_o)
    r = spec.ripple_fraction_v
    dv = [r * v for v in (op.v_c1, op.v_c2, op.v_c3, op.v_c4, op.v_c5, op.v_c6)]
    c1 = i_o * m * d * (1.0 - d) / (dv[0] * fs)
    c2 = i_o * m * (1.0 - d) ** 2 / (dv[1] * fs)
    c3, c4, c5 = (i_o * d / (dv[j] * fs) for j in (2, 3, 4))
    c6 = i_o * (1.0 - d) / (dv[5] * fs)
    return DesignResult(d, m, i_o, l1, l2, l3, c1, c2, c3, c4, c5, c6, *dv, spec=spec)


_L_NAMES = ("l1", "l2", "l3")
_C_NAMES = ("c1", "c2", "c3", "c4", "c5", "c6")


def check_choices(result: DesignResult, chosen: dict) -> list[str]:
    """Validate chosen L/C values against the minima; returns thin-margin notes."""
    missing = [n for n in _L_NAMES + _C_NAMES if n not in chosen]
    if missing:
        raise DesignError(f"missing chosen values: {', '.join(missing)}")
    notes = []
    for name, low in zip(_L_NAMES + _C_NAMES, result.l_min + result.c_min):
        value = float(chosen[name])
        if value < low:
            raise BelowCriticalValueError(
                f"below critical value: {name} = {value:.4g} < minimum {low:.4g}")
        if value < THIN_MARGIN * low:
            notes.append(f"{name} = {value:.4g} is within 10% of its minimum {low:.4g}")
    return notes


def load_mismatch(result: DesignResult, r_load: float, rel: float = 0.05) -> str | None:
    """Message when ``vo**2 / r_load`` misses the design power by more than ``rel``."""
    spec = result.spec
    p = spec.vo_target ** 2 / r_load
    if abs(p / spec.po - 1.0) > rel:
        return (f"load {r_load:g} ohm draws {p:.4g} W at {spec.vo_target:g} V, not the "
                f"design {spec.po:g} W (consistent load {spec.vo_target ** 2 / spec.po:.4g} ohm)")
    return None


def design_to_params(result: DesignResult, chosen: dict, r_load: float) -> ConverterParams:
    """Assemble simulatable parameters from a design and chosen parts.

    Thin margins and a load inconsistent with the design power raise
    warnings but do not fail.
    """
    for note in check_choices(result, chosen):
        warnings.warn(note, ThinMarginWarning, stacklevel=2)
    msg = load_mismatch(result, r_load)
    if msg:
        warnings.warn(msg, LoadMismatchWarning, stacklevel=2)
    extra = {k: chosen[k] for k in ("r_on", "r_on_vmc") if k in chosen}
    return ConverterParams(
        vin=result.spec.vin,
        **{n: float(chosen[n]) for n in _L_NAMES + _C_NAMES},
        r_load=r_load, fs=result.spec.fs, duty=result.duty, **extra,
    )
