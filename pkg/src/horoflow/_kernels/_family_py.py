"""numpy version of the taper accumulation kernel."""
import math

import numpy as np


def _taper(d, w):
    r = np.abs(d) / w
    return np.where(r < 1.0, np.cos(0.5 * np.pi * np.minimum(r, 1.0)) ** 2, 0.0)


def _ptaper(d, w):
    d = d - np.floor(d + 0.5)
    out = np.zeros_like(d)
    K = int(math.ceil(w + 0.5))
    for k in range(-K, K + 1):   # terms with |d + k| >= w vanish
        out += _taper(d + k, w)
    return out


def accumulate2(x, logh, theta, centers, widths, out):
    for i in range(len(centers)):
        c, w = centers[i], widths[i]
        idx = np.flatnonzero(np.abs(logh - c[1]) < w[1])
        if not len(idx):
            continue
        dth = theta[idx] - c[2]
        dth = dth - 2 * np.pi * np.floor(dth / (2 * np.pi) + 0.5)
        v = _taper(logh[idx] - c[1], w[1]) * _taper(dth, w[2]) * _ptaper(x[idx] - c[0], w[0])
        out[i, idx] += v
    return out


def accumulate3(x, y, logh, fib, centers, widths, out):
    for i in range(len(centers)):
        c, w = centers[i], widths[i]
        idx = np.flatnonzero(np.abs(logh - c[2]) < w[2])
        if not len(idx):
            continue
        lh = _taper(logh[idx] - c[2], w[2])
        acc = np.zeros(len(idx))
        f = fib[idx]
        for sgn in (1.0, -1.0):
            dot = np.clip(sgn * (f[:, 0] * c[3] + f[:, 1] * c[4]) + f[:, 2] * c[5], -1.0, 1.0)
            acc += (_taper(np.arccos(dot), w[3]) * _ptaper(sgn * y[idx] - c[1], w[1])
                    * _ptaper(sgn * x[idx] - c[0], w[0]))
        out[i, idx] += lh * acc
    return out
