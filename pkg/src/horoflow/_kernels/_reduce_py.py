"""Pure numpy fallback with the same arithmetic as the compiled kernel."""
import numpy as np


def _nearest(x):
    return np.ceil(x - 0.5)


def reduce_modular(a, b, c, d, cap):
    m = len(a)
    steps = np.zeros(m, dtype=np.int32)
    active = np.arange(m)
    for _ in range(cap):
        if not len(active):
            break
        steps[active] += 1
        A, B, C, Dd = a[active], b[active], c[active], d[active]
        D = C * C + Dd * Dd
        x = (A * C + B * Dd) / D
        y = (A * Dd - B * C) / D
        k = _nearest(x)
        A = A - k * C
        B = B - k * Dd
        x = x - k
        r2 = x * x + y * y
        inv = r2 < 1.0
        tie = ~inv & (x < 0.0) & (r2 <= 1.0 + 1e-12)
        swap = inv | tie
        A2 = np.where(swap, -C, A)
        B2 = np.where(swap, -Dd, B)
        C2 = np.where(swap, A, C)
        D2 = np.where(swap, B, Dd)
        a[active], b[active], c[active], d[active] = A2, B2, C2, D2
        active = active[inv]
    steps[active] = -1
    return steps


def reduce_picard(ar, ai, br, bi, cr, ci, dr, di, cap):
    m = len(ar)
    steps = np.zeros(m, dtype=np.int32)
    done_zr = np.zeros(m)
    done_zi = np.zeros(m)
    active = np.arange(m)
    for _ in range(cap):
        if not len(active):
            break
        steps[active] += 1
        Ar, Ai, Br, Bi = ar[active], ai[active], br[active], bi[active]
        Cr, Ci, Dr, Di = cr[active], ci[active], dr[active], di[active]
        D = Cr * Cr + Ci * Ci + Dr * Dr + Di * Di
        zr = (Br * Dr + Bi * Di + Ar * Cr + Ai * Ci) / D
        zi = (Bi * Dr - Br * Di + Ai * Cr - Ar * Ci) / D
        t = 1.0 / D
        kr = _nearest(zr)
        ki = _nearest(zi)
        Ar = Ar - (kr * Cr - ki * Ci)
        Ai = Ai - (kr * Ci + ki * Cr)
        Br = Br - (kr * Dr - ki * Di)
        Bi = Bi - (kr * Di + ki * Dr)
        zr = zr - kr
        zi = zi - ki
        inv = zr * zr + zi * zi + t * t < 1.0
        ar[active] = np.where(inv, -Cr, Ar)
        ai[active] = np.where(inv, -Ci, Ai)
        br[active] = np.where(inv, -Dr, Br)
        bi[active] = np.where(inv, -Di, Bi)
        cr[active] = np.where(inv, Ar, Cr)
        ci[active] = np.where(inv, Ai, Ci)
        dr[active] = np.where(inv, Br, Dr)
        di[active] = np.where(inv, Bi, Di)
        fin = active[~inv]
        done_zr[fin] = zr[~inv]
        done_zi[fin] = zi[~inv]
        active = active[inv]
    steps[active] = -1
    flip = (steps >= 0) & ((done_zi < 0.0) | ((done_zi == 0.0) & (done_zr < 0.0)))
    for re, im in ((ar, ai), (br, bi)):
        u = re[flip].copy()
        re[flip] = -im[flip]
        im[flip] = u
    for re, im in ((cr, ci), (dr, di)):
        u = re[flip].copy()
        re[flip] = im[flip]
        im[flip] = -u
    return steps
