# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Accumulate products of cos^2 tapers at sample points.

``out[i, j] += sum over the stabilizer of infinity of b_i(point j)``; the
caller handles the remaining coset representatives and the final clip.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport acos, cos, floor, ceil, fabs, M_PI

cnp.import_array()


cdef inline double _taper(double d, double w) nogil:
    cdef double r = fabs(d) / w
    cdef double c
    if r >= 1.0:
        return 0.0
    c = cos(0.5 * M_PI * r)
    return c * c


cdef inline double _ptaper(double d, double w) nogil:
    # only translates with |d + k| < w contribute
    cdef int k, k0, k1
    cdef double s = 0.0
    d = d - floor(d + 0.5)
    k0 = <int>ceil(-w - d)
    k1 = <int>floor(w - d)
    for k in range(k0, k1 + 1):
        s += _taper(d + k, w)
    return s


cdef inline double _angular(double dot, double w, double cw) nogil:
    # taper(acos(dot), w); width pi reduces to (1 + dot) / 2
    if dot <= cw:
        return 0.0
    if w >= M_PI:
        return 0.5 * (1.0 + dot)
    if dot > 1.0:
        dot = 1.0
    return _taper(acos(dot), w)


def accumulate2(const double[::1] x, const double[::1] logh, const double[::1] theta,
                const double[:, ::1] centers, const double[:, ::1] widths, double[:, ::1] out):
    cdef Py_ssize_t i, j, F = centers.shape[0], N = x.shape[0]
    cdef double v, dth
    with nogil:
        for i in range(F):
            for j in range(N):
                v = _taper(logh[j] - centers[i, 1], widths[i, 1])
                if v == 0.0:
                    continue
                dth = theta[j] - centers[i, 2]
                dth = dth - 2.0 * M_PI * floor(dth / (2.0 * M_PI) + 0.5)
                v = v * _taper(dth, widths[i, 2])
                if v == 0.0:
                    continue
                out[i, j] += v * _ptaper(x[j] - centers[i, 0], widths[i, 0])
    return out


def accumulate3(const double[::1] x, const double[::1] y, const double[::1] logh,
                const double[:, ::1] fib, const double[:, ::1] centers,
                const double[:, ::1] widths, double[:, ::1] out):
    cdef Py_ssize_t i, j, F = centers.shape[0], N = x.shape[0]
    cdef double lh, v, dot, sgn, acc
    cdef int e
    cw_arr = np.cos(np.minimum(np.asarray(widths[:, 3]), np.pi))
    cdef double[::1] cw = cw_arr
    with nogil:
        for i in range(F):
            for j in range(N):
                lh = _taper(logh[j] - centers[i, 2], widths[i, 2])
                if lh == 0.0:
                    continue
                acc = 0.0
                for e in range(2):
                    sgn = 1.0 - 2.0 * e
                    # z -> -z turns the fiber vector half way round the vertical
                    dot = sgn * (fib[j, 0] * centers[i, 3] + fib[j, 1] * centers[i, 4]) \
                        + fib[j, 2] * centers[i, 5]
                    v = _angular(dot, widths[i, 3], cw[i])
                    if v == 0.0:
                        continue
                    v = v * _ptaper(sgn * y[j] - centers[i, 1], widths[i, 1])
                    if v == 0.0:
                        continue
                    acc += v * _ptaper(sgn * x[j] - centers[i, 0], widths[i, 0])
                out[i, j] += lh * acc
    return out
