# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Batch reduction of SL(2) matrices into the fundamental domain.

Matrices are updated in place by left multiplication with lattice
generators.  Each routine returns the number of loop steps per row, or
-1 where the iteration cap was hit.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, fabs

cnp.import_array()


cdef inline double _nearest(double x) nogil:
    # integer k with x - k in (-1/2, 1/2]
    return ceil(x - 0.5)


def reduce_modular(double[::1] a, double[::1] b, double[::1] c, double[::1] d, int cap):
    cdef Py_ssize_t i, m = a.shape[0]
    cdef int it
    cdef double D, x, y, k, r2, ta, tb
    steps_arr = np.zeros(m, dtype=np.int32)
    cdef int[::1] steps = steps_arr
    with nogil:
        for i in range(m):
            it = 0
            while True:
                if it >= cap:
                    it = -1
                    break
                it += 1
                D = c[i] * c[i] + d[i] * d[i]
                x = (a[i] * c[i] + b[i] * d[i]) / D
                y = (a[i] * d[i] - b[i] * c[i]) / D
                k = _nearest(x)
                if k != 0.0:
                    a[i] = a[i] - k * c[i]
                    b[i] = b[i] - k * d[i]
                    x = x - k
                r2 = x * x + y * y
                if r2 < 1.0:
                    ta = a[i]
                    tb = b[i]
                    a[i] = -c[i]
                    b[i] = -d[i]
                    c[i] = ta
                    d[i] = tb
                    continue
                if x < 0.0 and r2 <= 1.0 + 1e-12:
                    ta = a[i]
                    tb = b[i]
                    a[i] = -c[i]
                    b[i] = -d[i]
                    c[i] = ta
                    d[i] = tb
                break
            steps[i] = it
    return steps_arr


def reduce_picard(double[::1] ar, double[::1] ai, double[::1] br, double[::1] bi,
                  double[::1] cr, double[::1] ci, double[::1] dr, double[::1] di, int cap):
    cdef Py_ssize_t i, m = ar.shape[0]
    cdef int it
    cdef double D, zr, zi, t, kr, ki, r2, u, v
    steps_arr = np.zeros(m, dtype=np.int32)
    cdef int[::1] steps = steps_arr
    with nogil:
        for i in range(m):
            it = 0
            while True:
                if it >= cap:
                    it = -1
                    break
                it += 1
                D = cr[i] * cr[i] + ci[i] * ci[i] + dr[i] * dr[i] + di[i] * di[i]
                # z = (b conj(d) + a conj(c)) / D
                zr = (br[i] * dr[i] + bi[i] * di[i] + ar[i] * cr[i] + ai[i] * ci[i]) / D
                zi = (bi[i] * dr[i] - br[i] * di[i] + ai[i] * cr[i] - ar[i] * ci[i]) / D
                t = 1.0 / D
                kr = _nearest(zr)
                ki = _nearest(zi)
                if kr != 0.0 or ki != 0.0:
                    ar[i] = ar[i] - (kr * cr[i] - ki * ci[i])
                    ai[i] = ai[i] - (kr * ci[i] + ki * cr[i])
                    br[i] = br[i] - (kr * dr[i] - ki * di[i])
                    bi[i] = bi[i] - (kr * di[i] + ki * dr[i])
                    zr = zr - kr
                    zi = zi - ki
                r2 = zr * zr + zi * zi + t * t
                if r2 < 1.0:
                    u = ar[i]; v = ai[i]
                    ar[i] = -cr[i]; ai[i] = -ci[i]
                    cr[i] = u; ci[i] = v
                    u = br[i]; v = bi[i]
                    br[i] = -dr[i]; bi[i] = -di[i]
                    dr[i] = u; di[i] = v
                    continue
                break
            if it >= 0 and (zi < 0.0 or (zi == 0.0 and zr < 0.0)):
                # diag(i, -i): z -> -z
                u = ar[i]; ar[i] = -ai[i]; ai[i] = u
                u = br[i]; br[i] = -bi[i]; bi[i] = u
                u = cr[i]; cr[i] = ci[i]; ci[i] = -u
                u = dr[i]; dr[i] = di[i]; di[i] = -u
            steps[i] = it
    return steps_arr
