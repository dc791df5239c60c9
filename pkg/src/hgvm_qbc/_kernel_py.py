"""Pure-Python stepping kernel; mirrors ``_kernel.pyx`` line by line."""

import math

import numpy as np

STATUS_DONE = 0
STATUS_EVENT = 1
STATUS_NONFINITE = 2


def advance(xe, phi, grows, mon, nsteps, t0, dt, stride, step0, rec, rec_n, mon_max, acc):
    """Take up to ``nsteps`` fixed steps ``xe <- phi @ xe`` in one configuration.

    Stops before a step after which some event function turns negative while
    decreasing. ``xe`` is updated in place. Every ``stride``-th global step is
    written to ``rec`` as ``[t, x]``; ``mon_max`` keeps running maxima of
    ``mon @ xe`` and ``acc`` trapezoidal integrals of ``x`` and ``v_o**2``.
    Returns ``(steps_done, status, rec_n)``.
    """
    n = xe.shape[0]
    g_old = grows @ xe
    x_old = xe.copy()
    vo_old = xe[5] + xe[7] + xe[8]
    for i in range(nsteps):
        x_new = phi @ x_old
        g_new = grows @ x_new
        if np.any((g_new < 0.0) & (g_new < g_old)):
            xe[:] = x_old
            return i, STATUS_EVENT, rec_n
        if not math.isfinite(float(x_new[: n - 1].sum())):
            xe[:] = x_old
            return i, STATUS_NONFINITE, rec_n
        np.maximum(mon_max, mon @ x_new, out=mon_max)
        vo_new = x_new[5] + x_new[7] + x_new[8]
        acc[: n - 1] += 0.5 * dt * (x_old[: n - 1] + x_new[: n - 1])
        acc[n - 1] += 0.5 * dt * (vo_old * vo_old + vo_new * vo_new)
        if (step0 + i + 1) % stride == 0:
            rec[rec_n, 0] = t0 + (i + 1) * dt
            rec[rec_n, 1:] = x_new[: n - 1]
            rec_n += 1
        x_old, g_old, vo_old = x_new, g_new, vo_new
    xe[:] = x_old
    return nsteps, STATUS_DONE, rec_n


def _poly_step(taylor, xe, h):
    out = taylor[4] @ xe
    for j in (3, 2, 1, 0):
        out = taylor[j] @ xe + h * out
    return out


def locate(xe, taylor, grows, hmax, tol, min_width):
    """Bisect for the earliest event inside a step of length ``hmax``.

    Event k fires at h when ``g_k(h) < 0`` and ``g_k(h) < g_k(0)``; the
    search stops once the fired functions are within ``tol`` below zero or
    the bracket is narrower than ``min_width``. Returns ``(h, mask)`` with
    bit k of ``mask`` set for each fired event.
    """
    g0 = grows @ xe

    def fired(h):
        g = grows @ _poly_step(taylor, xe, h)
        return (g < 0.0) & (g < g0), g

    lo, hi = 0.0, hmax
    f_hi, g_hi = fired(hi)
    while f_hi.any():
        if np.max(-g_hi[f_hi]) <= tol or hi - lo <= min_width:
            break
        mid = 0.5 * (lo + hi)
        f_mid, g_mid = fired(mid)
        if f_mid.any():
            hi, f_hi, g_hi = mid, f_mid, g_mid
        else:
            lo = mid
    mask = 0
    for k in np.flatnonzero(f_hi):
        mask |= 1 << int(k)
    return hi, mask
