"""Closed-form curves phi: [a, b] -> R^{n-1} and the local tools built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .config import TOL
from .errors import OrderOverflow, VanishingDerivative, VerificationFailed
from .lie_core import GroupElement, make_a, make_m

KINDS = ("polynomial", "trigonometric", "cubic-spline")
UNLIMITED = 10**6


@dataclass(frozen=True, eq=False)
class SmoothCurve:
    """A curve with exact derivatives.

    ``coefficients`` depends on ``kind``:

    polynomial
        array (deg+1, d) of ascending power coefficients.
    trigonometric
        pair (cos, sin) of arrays (K+1, d); component j is
        sum_k cos[k, j] cos(k s) + sin[k, j] sin(k s).
    cubic-spline
        pair (knots, values) with values of shape (len(knots), d);
        not-a-knot end conditions.
    """
    kind: str
    coefficients: object
    domain: tuple

    def __post_init__(self):
        a, b = map(float, self.domain)
        if not a < b:
            raise ValueError(f"empty domain [{a}, {b}]")
        object.__setattr__(self, "domain", (a, b))
        if self.kind == "polynomial":
            c = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
            object.__setattr__(self, "coefficients", c)
        elif self.kind == "trigonometric":
            cs, sn = self.coefficients
            cs = np.atleast_2d(np.asarray(cs, dtype=float))
            sn = np.atleast_2d(np.asarray(sn, dtype=float))
            if cs.shape != sn.shape:
                raise ValueError("cos and sin coefficient arrays must match")
            object.__setattr__(self, "coefficients", (cs, sn))
        elif self.kind == "cubic-spline":
            knots, vals = self.coefficients
            knots = np.asarray(knots, dtype=float)
            vals = np.asarray(vals, dtype=float)
            if vals.ndim == 1:
                vals = vals[:, None]
            if knots[0] > a or knots[-1] < b:
                raise ValueError("spline knots must cover the domain")
            object.__setattr__(self, "coefficients", (knots, vals))
            object.__setattr__(self, "_spline", CubicSpline(knots, vals, axis=0))
        else:
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @property
    def dim(self) -> int:
        if self.kind == "polynomial":
            return self.coefficients.shape[1]
        if self.kind == "trigonometric":
            return self.coefficients[0].shape[1]
        return self.coefficients[1].shape[1]

    @property
    def n(self) -> int:
        return self.dim + 1

    @property
    def max_order(self) -> int:
        return 3 if self.kind == "cubic-spline" else UNLIMITED

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    def __call__(self, s):
        return eval_derivative(self, s, 0)


def polynomial(coeffs, domain=(0.0, 1.0)) -> SmoothCurve:
    return SmoothCurve("polynomial", coeffs, domain)


def eval_derivative(c: SmoothCurve, s, m: int = 0) -> np.ndarray:
    """m-th derivative at s (scalar -> (d,), array -> (len(s), d))."""
    if m < 0:
        raise ValueError("derivative order must be nonnegative")
    if m > c.max_order:
        raise OrderOverflow(f"{c.kind} curve has exact derivatives only up to order {c.max_order}")
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if c.kind == "polynomial":
        coef = c.coefficients
        if m >= coef.shape[0]:
            out = np.zeros((len(s), c.dim))
        else:
            dc = P.polyder(coef, m, axis=0)
            out = P.polyval(s, dc).T.reshape(len(s), c.dim)
    elif c.kind == "trigonometric":
        cs, sn = c.coefficients
        k = np.arange(cs.shape[0], dtype=float)
        ks = np.outer(s, k)
        # d^m/ds^m cos(ks) = k^m cos(ks + m pi/2), likewise for sin
        shift = m * np.pi / 2
        km = k ** m if m else np.ones_like(k)
        cosp = np.cos(ks + shift) * km
        sinp = np.sin(ks + shift) * km
        out = cosp @ cs + sinp @ sn
    else:
        out = c._spline(s, m)
        out = out.reshape(len(s), c.dim)
    return out[0] if scalar else out


@dataclass(frozen=True)
class TaylorModel:
    center: float
    degree: int
    coeffs: np.ndarray   # (degree+1, d); value = sum coeffs[k] (s - center)^k

    def __call__(self, s):
        scalar = np.ndim(s) == 0
        ds = np.atleast_1d(np.asarray(s, dtype=float)) - self.center
        out = P.polyval(ds, self.coeffs).T.reshape(len(ds), -1)
        return out[0] if scalar else out

    def derivative(self, s, m: int):
        scalar = np.ndim(s) == 0
        ds = np.atleast_1d(np.asarray(s, dtype=float)) - self.center
        if m > self.degree:
            out = np.zeros((len(ds), self.coeffs.shape[1]))
        else:
            out = P.polyval(ds, P.polyder(self.coeffs, m, axis=0)).T.reshape(len(ds), -1)
        return out[0] if scalar else out


def taylor_model(c: SmoothCurve, x: float, degree: int) -> TaylorModel:
    if degree > c.max_order:
        raise OrderOverflow(f"degree {degree} exceeds available order {c.max_order}")
    coeffs = np.array([eval_derivative(c, x, m) / math.factorial(m) for m in range(degree + 1)])
    return TaylorModel(float(x), degree, coeffs)


def remainder_bound(c: SmoothCurve, model: TaylorModel, J, grid: int = 10_000) -> float:
    """sup_J |phi^(d) - phi^(d)(x)| * |J|^d / d!, from the integral form of the remainder."""
    lo, hi = J
    s = np.linspace(lo, hi, grid)
    d = model.degree
    dd = eval_derivative(c, s, d) - eval_derivative(c, model.center, d)
    osc = float(np.max(np.linalg.norm(dd, axis=1)))
    return osc * (hi - lo) ** d / math.factorial(d)


# --------------------------------------------------------------------------
# iterated Rolle bound
# --------------------------------------------------------------------------

def rolle_constant(m: int) -> float:
    return 2.0 ** m * 3.0 ** (m * (m - 1) / 2)


def polynomial_psi(coeffs) -> Callable[[np.ndarray, int], np.ndarray]:
    """Wrap ascending scalar polynomial coefficients as psi(s, k) = psi^(k)(s)."""
    coeffs = np.asarray(coeffs, dtype=float)

    def psi(s, k=0):
        if k >= len(coeffs):
            return np.zeros_like(np.asarray(s, dtype=float))
        return P.polyval(s, P.polyder(coeffs, k)) if k else P.polyval(s, coeffs)
    return psi


def _rolle_point(psi, m: int, lo: float, hi: float, grid: int) -> float:
    if m == 0:
        return 0.5 * (lo + hi)
    third = (hi - lo) / 3.0
    x1 = _rolle_point(psi, m - 1, lo, lo + third, grid)
    x2 = _rolle_point(psi, m - 1, hi - third, hi, grid)
    slope = (psi(x2, m - 1) - psi(x1, m - 1)) / (x2 - x1)
    # mean value point of psi^(m-1) on [x1, x2]
    f = lambda s: psi(s, m) - slope
    s = np.linspace(x1, x2, grid)
    vals = f(s)
    sign = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)
    if len(sign):
        i = sign[0]
        if vals[i] == 0:
            return float(s[i])
        if vals[i + 1] == 0:
            return float(s[i + 1])
        return float(brentq(f, s[i], s[i + 1], xtol=1e-15))
    return float(s[np.argmin(np.abs(vals))])


def rolle_witness(psi, m: int, delta: float, grid: int = 2001) -> float:
    """A point xi in (0, delta) with |psi^(m)(xi)| <= 2^m 3^{m(m-1)/2} delta^-m sup|psi|.

    ``psi(s, k)`` must return the exact k-th derivative.  The point is
    found by recursive trisection and the inequality is re-checked
    against a grid supremum before returning.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    xi = _rolle_point(psi, m, 0.0, delta, grid)
    sup = float(np.max(np.abs(psi(np.linspace(0.0, delta, 10 * grid + 1), 0))))
    lhs = abs(float(psi(xi, m)))
    rhs = rolle_constant(m) * delta ** (-m) * sup
    if not (0.0 < xi < delta) or lhs > rhs * (1 + TOL.rolle_slack) + 1e-300:
        raise VerificationFailed(f"|psi^({m})(xi)| = {lhs:.6g} exceeds bound {rhs:.6g}")
    return xi


# --------------------------------------------------------------------------
# normalizer z(s)
# --------------------------------------------------------------------------

def normalizer_parts(v: np.ndarray):
    """(t, angle) with z = a_t m_angle sending v to e_1; angle is None for n = 2."""
    v = np.asarray(v, dtype=float)
    r = float(np.linalg.norm(v))
    if r <= TOL.derivative_floor:
        raise VanishingDerivative(f"|phi'(s)| = {r:.3e}")
    if len(v) == 1:
        return -math.log(r), None
    return -math.log(r), -math.atan2(v[1], v[0])


def normalizer_z(c: SmoothCurve, s: float) -> GroupElement:
    v = eval_derivative(c, s, 1)
    t, ang = normalizer_parts(v)
    if ang is None:
        # M is trivial in the identity component for n = 2, so z.phi' = +-e_1
        return make_a(t, 2)
    return make_a(t, 3) @ make_m(ang)


def z_action(z: GroupElement, v) -> np.ndarray:
    """The vector z.v defined by u(z.v) = z u(v) z^{-1}."""
    n = z.n
    m = z.mat
    # for z = diag(l, R, 1/l): z u(v) z^-1 has top row l * (R v)^T
    return m[0, 0] * (m[1:n, 1:n] @ np.asarray(v, dtype=float))


# --------------------------------------------------------------------------
# sphere / affine containment
# --------------------------------------------------------------------------

def sphere_affine_residual(points):
    """Best geometric fit of the points by a sphere or a proper affine subspace.

    Returns ``(model, residual)`` with the RMS geometric distance of the
    better class.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    npts, d = X.shape
    if npts < d + 3:
        raise ValueError(f"need at least {d + 3} points in R^{d}")
    c = X.mean(axis=0)
    Y = X - c
    sv = np.linalg.svd(Y, compute_uv=False)
    affine = float(sv[-1] / math.sqrt(npts)) if len(sv) == d else 0.0
    sphere = math.inf
    A = np.hstack([Y, np.ones((npts, 1))])
    rhs = -np.sum(Y * Y, axis=1)
    sol, _, rank, svals = np.linalg.lstsq(A, rhs, rcond=None)
    if rank == d + 1 and svals[-1] > 1e-9 * svals[0]:
        center = -0.5 * sol[:d]
        r2 = float(center @ center - sol[d])
        if r2 > 0:
            dist = np.linalg.norm(Y - center, axis=1) - math.sqrt(r2)
            sphere = float(np.sqrt(np.mean(dist ** 2)))
    if affine <= sphere:
        return "affine", affine
    return "sphere", sphere


def contained_in_obstruction(points, tol: float = TOL.containment) -> bool:
    return sphere_affine_residual(points)[1] < tol
