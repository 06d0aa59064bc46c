"""Numerical checks of the growth lemmas along s -> a_t u(phi(s)) v."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .config import TOL
from .curves import SmoothCurve, eval_derivative, sphere_affine_residual, taylor_model
from .errors import NoValidInterval, SupTooSmall, VerificationFailed
from .lie_core import GroupElement, make_u
from .rep_v import WedgeVector

DYADIC_LEVELS = 40


class OrbitNorms:
    """s -> a_t u(phi(s)) v for a fixed curve and t, caching the V-matrices."""

    def __init__(self, c: SmoothCurve, t: float, rep):
        self.c, self.t, self.rep = c, t, rep
        self._at = np.exp(rep.weights * t)    # a_t is diagonal on V
        self._cache = {}

    def matrix(self, s: float) -> np.ndarray:
        key = float(s)
        m = self._cache.get(key)
        if m is None:
            m = self._at[:, None] * self.rep.matrix(make_u(eval_derivative(self.c, key, 0)))
            self._cache[key] = m
        return m

    def norm(self, s: float, v: np.ndarray) -> float:
        return float(np.linalg.norm(self.matrix(s) @ v))


@dataclass(frozen=True)
class BasicLemmaReport:
    interval: Tuple[float, float]
    endpoint_norms: Tuple[float, float]
    interior: Tuple[bool, bool]
    C: float
    R0: float
    t: float
    p: int
    x: float
    v_norm: float

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]

    def to_dict(self) -> dict:
        return asdict(self)


def _check_report(rep: BasicLemmaReport, domain, norms: Optional[OrbitNorms] = None, v=None):
    a, b = domain
    s0, s1 = rep.interval
    if not (a <= s0 <= rep.x <= s1 <= b):
        raise VerificationFailed("interval does not contain x inside the domain")
    if not math.exp(rep.t) * rep.length ** rep.p < rep.C:
        raise VerificationFailed("length bound e^t |J|^p < C fails")
    ends = rep.endpoint_norms
    if norms is not None:
        ends = (norms.norm(s0, v), norms.norm(s1, v))
    floor = rep.v_norm / rep.R0
    for inside, val in zip(rep.interior, ends):
        if inside and val < floor * (1 - 1e-12):
            raise VerificationFailed(f"endpoint norm {val:.6g} below |v|/R0 = {floor:.6g}")


def basic_lemma_search(c: SmoothCurve, v: WedgeVector, t: float, C: float, x: float,
                       p: Optional[int] = None, threshold: float = 1.0) -> BasicLemmaReport:
    """Interval [s, s'] around x with e^t |s'-s|^p < C and large endpoint norms.

    The candidate intervals are the dyadic windows of length |I| 2^-k
    centred at x (clipped to I).  Starting from k = 40 the window is
    doubled while the length bound still holds, stopping early once both
    interior endpoint norms reach ``threshold * |v|``.  R0 is the smallest
    constant >= 1 for which the endpoint conditions hold.
    """
    n = c.n
    p = n if p is None else int(p)
    if p not in (n, 2):
        raise ValueError(f"exponent must be n = {n} or 2")
    a, b = c.domain
    if not a <= x <= b:
        raise ValueError("x must lie in the curve domain")
    vn = v.norm()
    if abs(vn - 1.0) > 1e-9:
        raise ValueError("v must be a unit vector")
    norms = OrbitNorms(c, t, v.rep)

    def window(k):
        L = (b - a) * 2.0 ** (-k)
        s0, s1 = max(a, x - L / 2), min(b, x + L / 2)
        return s0, s1

    def ok(J):
        return math.exp(t) * (J[1] - J[0]) ** p < C

    if not ok(window(DYADIC_LEVELS)):
        raise NoValidInterval(f"e^t |J|^p >= C already on the finest dyadic cell (t = {t})")
    best = window(DYADIC_LEVELS)
    for k in range(DYADIC_LEVELS - 1, -1, -1):
        J = window(k)
        if not ok(J):
            break
        best = J
        inner = [s for s, edge in zip(J, (a, b)) if s != edge]
        if inner and all(norms.norm(s, v.coords) >= threshold * vn for s in inner):
            break
    interior = (best[0] > a, best[1] < b)
    ends = (norms.norm(best[0], v.coords), norms.norm(best[1], v.coords))
    ratios = [vn / e for e, inside in zip(ends, interior) if inside]
    R0 = max([1.0] + ratios)
    out = BasicLemmaReport(best, ends, interior, float(C), float(R0), float(t), p, float(x), vn)
    _check_report(out, c.domain, norms, v.coords)
    return out


def approximation_check(c: SmoothCurve, v: WedgeVector, t: float, x: float, c_tol: float,
                        interval=None, C: float = 1.0, grid: int = 1000):
    """sup over the interval of |a_t u(phi(s)) v - a_t u(P_x(s)) v| against c_tol |a_t u(phi(x)) v|.

    P_x is the degree-n Taylor model of phi at x.  The interval defaults
    to the Basic Lemma interval for C = 1.
    """
    n = c.n
    if interval is None:
        interval = basic_lemma_search(c, v, t, C, x).interval
    model = taylor_model(c, x, n)
    rep = v.rep
    at = np.exp(rep.weights * t)
    s = np.linspace(interval[0], interval[1], grid)
    phi = eval_derivative(c, s, 0)
    P = model(s)
    gap = 0.0
    for i in range(grid):
        w1 = rep.matrix(make_u(phi[i])) @ v.coords
        w2 = rep.matrix(make_u(P[i])) @ v.coords
        gap = max(gap, float(np.linalg.norm(at * (w1 - w2))))
    ref = float(np.linalg.norm(at * (rep.matrix(make_u(eval_derivative(c, x, 0))) @ v.coords)))
    bound = c_tol * ref
    return gap, bound, bool(gap <= bound)


def _as_callable(zeta) -> Callable[[np.ndarray], np.ndarray]:
    if callable(zeta):
        return zeta
    coef = np.asarray(zeta, dtype=float)
    if coef.ndim == 1:
        coef = coef[:, None]
    return lambda s: np.polynomial.polynomial.polyval(s, coef).T.reshape(len(s), -1)


def poly_growth_ratio(zeta, J, r: float, R: float, grid: int = 10_000):
    """Grid measures of {s in J : |zeta(s)| < r} and {|zeta(s)| < R}.

    ``zeta`` is a callable returning (len(s), dim) values or an array of
    ascending coefficients (deg+1, dim).
    """
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    lo, hi = map(float, J)
    s = lo + (np.arange(grid) + 0.5) * (hi - lo) / grid
    f = _as_callable(zeta)
    vals = np.linalg.norm(np.atleast_2d(f(s)).reshape(grid, -1), axis=1)
    ends = np.linalg.norm(np.atleast_2d(f(np.array([lo, hi]))).reshape(2, -1), axis=1)
    sup = max(vals.max(), ends.max())
    if sup < R:
        raise SupTooSmall(f"sup |zeta| = {sup:.6g} < R = {R}")
    cell = (hi - lo) / grid
    return float(np.count_nonzero(vals < r) * cell), float(np.count_nonzero(vals < R) * cell)


def square_grid(n: int, half_width: float, spacing: float) -> np.ndarray:
    k = int(round(half_width / spacing))
    ax = spacing * np.arange(-k, k + 1)
    if n == 2:
        return ax[:, None]
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def sg_sphere_detect(g: GroupElement, p0: WedgeVector, grid):
    """Grid points x with u(x) g p0 in V^- + V^0, and their best sphere/affine fit.

    Returns ``(points, fit, residual)`` with fit one of "sphere",
    "affine" or "empty".
    """
    rep = p0.rep
    pts = np.asarray(grid, dtype=float).reshape(-1, rep.n - 1)
    base = rep.matrix(g) @ p0.coords
    thresh = TOL.sg_kernel * p0.norm()
    plus = rep.weights > 0
    hits = []
    for x in pts:
        w = rep.matrix(make_u(x)) @ base
        if np.linalg.norm(w[plus]) < thresh:
            hits.append(x)
    hits = np.array(hits).reshape(-1, rep.n - 1)
    d = rep.n - 1
    if not len(hits):
        return hits, "empty", 0.0
    if len(hits) < d + 3:
        # too few points to separate the two classes; they span an affine set
        y = hits - hits.mean(axis=0)
        res = float(np.linalg.svd(y, compute_uv=False)[-1] / math.sqrt(len(hits))) if len(hits) > d else 0.0
        return hits, "affine", res
    fit, res = sphere_affine_residual(hits)
    return hits, fit, res
