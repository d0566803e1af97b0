# cython: boundscheck=False, wraparound=False, cdivision=True
# Compiled twins of dbmfsim._kernels_py; keep the float expressions in the
# exact same shape so both backends emit bit-identical doubles.

from libc.math cimport sqrt

BACKEND = "cython"


def advance_moving(double[::1] xs, double[::1] ys,
                   double[::1] txs, double[::1] tys,
                   double[::1] speeds, double[::1] pauses, double dt):
    cdef Py_ssize_t i, n = xs.shape[0]
    cdef double dx, dy, dist, step
    flagged = []
    for i in range(n):
        if pauses[i] > 0.0:
            flagged.append(i)
            continue
        dx = txs[i] - xs[i]
        dy = tys[i] - ys[i]
        dist = sqrt(dx * dx + dy * dy)
        step = speeds[i] * dt
        if step >= dist:
            flagged.append(i)
        else:
            xs[i] += dx / dist * step
            ys[i] += dy / dist * step
    return flagged


def scan_receivers(double[::1] xs, double[::1] ys, double[::1] ranges,
                   unsigned char[::1] alive, Py_ssize_t sender,
                   double k_const, double trans_pow, int q_exp,
                   double min_dist, bint want_rss):
    cdef Py_ssize_t j, n = xs.shape[0]
    cdef double sx = xs[sender]
    cdef double sy = ys[sender]
    cdef double sr = ranges[sender]
    cdef double dx, dy, d2, limit, d
    idx = []
    rss = [] if want_rss else None
    for j in range(n):
        if j == sender or not alive[j]:
            continue
        limit = sr if sr < ranges[j] else ranges[j]
        dx = xs[j] - sx
        dy = ys[j] - sy
        d2 = dx * dx + dy * dy
        if d2 > limit * limit:
            continue
        idx.append(j)
        if want_rss:
            d = sqrt(d2)
            if d < min_dist:
                d = min_dist
            if q_exp == 2:
                rss.append(k_const * trans_pow / (d * d))
            else:
                rss.append(k_const * trans_pow / (d * d * d))
    return idx, rss
