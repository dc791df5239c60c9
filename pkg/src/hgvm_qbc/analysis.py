"""Closed-form CCM steady state: gain, capacitor voltages, stresses, currents."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError
from .model import OperatingPoint


def _check_duty(duty: float) -> None:
    if not (isinstance(duty, (int, float)) and math.isfinite(duty) and 0.0 < duty < 1.0):
        raise DomainError(f"duty ratio must lie strictly inside (0, 1), got {duty!r}")


def gain_ccm(duty: float) -> float:
    """Ideal CCM conversion ratio ``(2 + D) / (1 - D)**2``."""
    _check_duty(duty)
    return (2.0 + duty) / (1.0 - duty) ** 2


def qbc_gain(duty: float) -> float:
    """Conventional quadratic boost ratio, the second factor of :func:`gain_ccm`."""
    _check_duty(duty)
    return 1.0 / (1.0 - duty) ** 2


def steady_state_point(vin: float, duty: float, i_o: float) -> OperatingPoint:
    """Evaluate the analytic operating point.

    ``i_q_on`` is the switch current while it conducts (equal to
    ``i_l1 + i_l2``); the diode currents are full-period averages.
    """
    _check_duty(duty)
    if not math.isfinite(vin) or vin <= 0:
        raise DomainError(f"vin must be > 0, got {vin!r}")
    if not math.isfinite(i_o) or i_o < 0:
        raise DomainError(f"output current must be >= 0, got {i_o!r}")

    d = duty
    m = gain_ccm(d)
    v_c1 = vin / (1.0 - d)
    v_c2 = vin * d / (1.0 - d) ** 2
    v_c3 = vin / (1.0 - d) ** 2
    v_o = m * vin
    # stresses expressed through v_o so the identities hold to rounding
    v_q = v_o / (2.0 + d)
    return OperatingPoint(
        vin=vin,
        duty=d,
        gain=m,
        v_c1=v_c1,
        v_c2=v_c2,
        v_c3=v_c3,
        v_c4=v_c3,
        v_c5=v_c3,
        v_c6=v_c2,
        v_o=v_o,
        v_q=v_q,
        v_d1=v_o * (1.0 - d) / (2.0 + d),
        v_d2=v_o * d / (2.0 + d),
        v_d3=v_q,
        v_d4=v_q,
        v_d5=v_q,
        v_d6=v_q,
        i_l1=i_o * m,
        i_l2=i_o * m * (1.0 - d),
        i_l3=i_o * (3.0 + d) / d,
        i_d1=i_o * m * (1.0 - d),
        i_d2=i_o * m * d,
        i_d3=3.0 * i_o,
        i_d4=i_o,
        i_d5=i_o,
        i_d6=i_o,
        i_q_on=i_o * m * (2.0 - d),
        i_o=i_o,
    )


def verify_operating_point_identities(op: OperatingPoint, duty: float) -> np.ndarray:
    """Signed residuals of the three structural identities of an operating point.

    Returns ``[v_o - (v_c3 + v_c5 + v_c6), v_q * (2 + D) - v_o, gain * vin - v_o]``.
    """
    return np.array([
        op.v_o - (op.v_c3 + op.v_c5 + op.v_c6),
        op.v_q * (2.0 + duty) - op.v_o,
        op.gain * op.vin - op.v_o,
    ])
