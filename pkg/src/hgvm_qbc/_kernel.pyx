# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernel; same contract as ``_kernel_py.advance``."""

from libc.math cimport isfinite

cdef enum:
    NMAX = 32
    GMAX = 8
    MMAX = 32


def advance(double[::1] xe, const double[:, ::1] phi, const double[:, ::1] grows,
            const double[:, ::1] mon, long nsteps, double t0, double dt, long stride,
            long step0, double[:, ::1] rec, long rec_n, double[::1] mon_max,
            double[::1] acc):
    cdef Py_ssize_t n = xe.shape[0], ng = grows.shape[0], nm = mon.shape[0]
    cdef double x_old[NMAX]
    cdef double x_new[NMAX]
    cdef double g_old[GMAX]
    cdef double g_new[GMAX]
    cdef double s, vo_old, vo_new, half = 0.5 * dt
    cdef Py_ssize_t i, j, k
    cdef long it
    cdef bint fire
    if n > NMAX or ng > GMAX or nm > MMAX:
        raise ValueError("kernel dimensions exceed static buffers")
    for j in range(n):
        x_old[j] = xe[j]
    for k in range(ng):
        s = 0.0
        for j in range(n):
            s += grows[k, j] * x_old[j]
        g_old[k] = s
    vo_old = x_old[5] + x_old[7] + x_old[8]
    for it in range(nsteps):
        for k in range(n):
            s = 0.0
            for j in range(n):
                s += phi[k, j] * x_old[j]
            x_new[k] = s
        fire = False
        for k in range(ng):
            s = 0.0
            for j in range(n):
                s += grows[k, j] * x_new[j]
            g_new[k] = s
            if s < 0.0 and s < g_old[k]:
                fire = True
        if fire:
            for j in range(n):
                xe[j] = x_old[j]
            return it, 1, rec_n
        s = 0.0
        for j in range(n - 1):
            s += x_new[j]
        if not isfinite(s):
            for j in range(n):
                xe[j] = x_old[j]
            return it, 2, rec_n
        for k in range(nm):
            s = 0.0
            for j in range(n):
                s += mon[k, j] * x_new[j]
            if s > mon_max[k]:
                mon_max[k] = s
        vo_new = x_new[5] + x_new[7] + x_new[8]
        for j in range(n - 1):
            acc[j] += half * (x_old[j] + x_new[j])
        acc[n - 1] += half * (vo_old * vo_old + vo_new * vo_new)
        if (step0 + it + 1) % stride == 0:
            rec[rec_n, 0] = t0 + (it + 1) * dt
            for j in range(n - 1):
                rec[rec_n, j + 1] = x_new[j]
            rec_n += 1
        for j in range(n):
            x_old[j] = x_new[j]
        for k in range(ng):
            g_old[k] = g_new[k]
        vo_old = vo_new
    for j in range(n):
        xe[j] = x_old[j]
    return nsteps, 0, rec_n


cdef void _poly_step(const double[:, :, ::1] tay, double* xe, double h, Py_ssize_t n,
                     double* out) noexcept nogil:
    cdef double tmp[NMAX]
    cdef Py_ssize_t i, j, p
    cdef double s
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += tay[4, i, j] * xe[j]
        out[i] = s
    for p in range(3, -1, -1):
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += tay[p, i, j] * xe[j]
            tmp[i] = s + h * out[i]
        for i in range(n):
            out[i] = tmp[i]


cdef long _fired(const double[:, :, ::1] tay, const double[:, ::1] grows, double* xe,
                 double* g0, double h, Py_ssize_t n, Py_ssize_t ng, double* worst) noexcept nogil:
    cdef double x[NMAX]
    cdef double s
    cdef Py_ssize_t k, j
    cdef long mask = 0
    _poly_step(tay, xe, h, n, x)
    worst[0] = 0.0
    for k in range(ng):
        s = 0.0
        for j in range(n):
            s += grows[k, j] * x[j]
        if s < 0.0 and s < g0[k]:
            mask |= 1 << k
            if -s > worst[0]:
                worst[0] = -s
    return mask


def locate(double[::1] xe, const double[:, :, ::1] taylor, const double[:, ::1] grows,
           double hmax, double tol, double min_width):
    cdef Py_ssize_t n = xe.shape[0], ng = grows.shape[0], k, j
    cdef double x0[NMAX]
    cdef double g0[GMAX]
    cdef double s, lo = 0.0, hi = hmax, mid, worst_hi, worst_mid
    cdef long f_hi, f_mid
    if n > NMAX or ng > GMAX:
        raise ValueError("kernel dimensions exceed static buffers")
    for j in range(n):
        x0[j] = xe[j]
    for k in range(ng):
        s = 0.0
        for j in range(n):
            s += grows[k, j] * x0[j]
        g0[k] = s
    f_hi = _fired(taylor, grows, x0, g0, hi, n, ng, &worst_hi)
    while f_hi != 0:
        if worst_hi <= tol or hi - lo <= min_width:
            break
        mid = 0.5 * (lo + hi)
        f_mid = _fired(taylor, grows, x0, g0, mid, n, ng, &worst_mid)
        if f_mid != 0:
            hi, f_hi, worst_hi = mid, f_mid, worst_mid
        else:
            lo = mid
    return hi, f_hi
