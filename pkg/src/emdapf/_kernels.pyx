# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_fallback`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


def local_extrema(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] mx = np.empty(max(n // 2, 1), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] mn = np.empty(max(n // 2, 1), dtype=np.int64)
    cdef Py_ssize_t nmax = 0, nmin = 0
    cdef Py_ssize_t i, prev_nz = -1, start
    cdef int prev_sign = 0, sg
    cdef double d
    if n < 3:
        return mx[:0].copy(), mn[:0].copy()
    for i in range(n - 1):
        d = xv[i + 1] - xv[i]
        if d == 0.0:
            continue
        sg = 1 if d > 0 else -1
        if prev_sign != 0 and sg != prev_sign:
            start = prev_nz + 1
            if prev_sign > 0:
                mx[nmax] = (start + i) // 2
                nmax += 1
            else:
                mn[nmin] = (start + i) // 2
                nmin += 1
        prev_sign = sg
        prev_nz = i
    return mx[:nmax].copy(), mn[:nmin].copy()


def zero_crossings(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef int prev = 0, sg
    cdef long count = 0
    for i in range(n):
        if xv[i] > 0:
            sg = 1
        elif xv[i] < 0:
            sg = -1
        else:
            continue
        if prev != 0 and sg != prev:
            count += 1
        prev = sg
    return int(count)


def sd_sum(h_prev, h_cur, double eps):
    cdef const double[::1] hp = np.ascontiguousarray(h_prev, dtype=np.float64)
    cdef const double[::1] hc = np.ascontiguousarray(h_cur, dtype=np.float64)
    cdef Py_ssize_t i, n = hp.shape[0]
    cdef double total = 0.0, diff
    cdef long used = 0
    for i in range(n):
        if fabs(hp[i]) >= eps:
            diff = hp[i] - hc[i]
            total += diff * diff / (hp[i] * hp[i])
            used += 1
    return float(total), int(used)


def hysteresis_track(ref, double band, double slew, double dt, x0, s0, int feedback_leg=-1):
    cdef const double[:, ::1] rv = np.ascontiguousarray(ref, dtype=np.float64)
    cdef Py_ssize_t legs = rv.shape[0], n = rv.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cur_arr = np.empty((legs, n), dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] st_arr = np.empty((legs, n), dtype=np.uint8)
    cdef double[:, ::1] cur = cur_arr
    cdef unsigned char[:, ::1] st = st_arr
    cdef double[::1] x = np.array(x0, dtype=np.float64)
    cdef unsigned char[::1] s = np.array(s0, dtype=np.uint8)
    cdef Py_ssize_t[::1] order = np.empty(legs, dtype=np.intp)
    cdef Py_ssize_t j, k, leg, m = 0
    cdef double half = 0.5 * band, step = slew * dt, r, e, other_err
    cdef bint has_fb = 0 <= feedback_leg < legs
    for leg in range(legs):
        if leg != feedback_leg:
            order[m] = leg
            m += 1
    if has_fb:
        order[m] = feedback_leg
        m += 1
    for k in range(n):
        other_err = 0.0
        for j in range(m):
            leg = order[j]
            r = rv[leg, k]
            if has_fb and leg == feedback_leg:
                r += other_err
            e = r - x[leg]
            if e > half:
                s[leg] = 1
            elif e < -half:
                s[leg] = 0
            if s[leg]:
                x[leg] += step
            else:
                x[leg] -= step
            cur[leg, k] = x[leg]
            st[leg, k] = s[leg]
            if not (has_fb and leg == feedback_leg):
                other_err += r - x[leg]
    return cur_arr, st_arr
