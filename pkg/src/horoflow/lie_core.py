"""The group G = SO(Q_n), Q_n(y, x, z) = 2yz - |x|^2, for n in {2, 3}.

Coordinates are ordered (y, x_1, ..., x_{n-1}, z).  The named subgroups:

* ``A``   -- ``make_a(t) = diag(e^t, 1, ..., 1, e^-t)``
* ``U+``  -- ``make_u(x)``, the upper unipotent matrices
* ``U-``  -- ``make_u(x, side="lower")``, their transposes
* ``M``   -- rotations of the x-block, fixing y and z
* ``K``   -- the stabilizer of the timelike vector ``e_y + e_z``
* ``P-``  -- ``U- A M``, the lower block-triangular elements
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import TOL
from .errors import NearCellBoundary, NotInSubgroup

SUPPORTED_N = (2, 3)


def _check_n(n: int) -> int:
    if n not in SUPPORTED_N:
        raise ValueError(f"n must be 2 or 3, got {n!r}")
    return n


def gram(n: int) -> np.ndarray:
    """Gram matrix J_n of Q_n, so that Q_n(v) = v^T J_n v."""
    _check_n(n)
    J = -np.eye(n + 1)
    J[0, 0] = J[n, n] = 0.0
    J[0, n] = J[n, 0] = 1.0
    return J


def base_vector(n: int) -> np.ndarray:
    """The timelike vector e_y + e_z fixed by K (Q_n of it equals 2)."""
    b = np.zeros(n + 1)
    b[0] = b[n] = 1.0
    return b


def timelike_frame(n: int) -> np.ndarray:
    """Columns (b/sqrt2, (e_y - e_z)/sqrt2, e_x1, ...) turning J_n into diag(1, -1, ..., -1)."""
    C = np.zeros((n + 1, n + 1))
    r = 1.0 / np.sqrt(2.0)
    C[0, 0] = C[n, 0] = r
    C[0, 1], C[n, 1] = r, -r
    for i in range(1, n):
        C[i, i + 1] = 1.0
    return C


@dataclass(frozen=True, eq=False)
class GroupElement:
    n: int
    mat: np.ndarray

    def __post_init__(self):
        m = np.array(self.mat, dtype=float)
        if m.shape != (self.n + 1, self.n + 1):
            raise ValueError(f"expected {(self.n + 1,) * 2} matrix, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def inv(self) -> "GroupElement":
        return invert(self)

    def __repr__(self):
        return f"GroupElement(n={self.n}, mat={self.mat.tolist()!r})"


def identity(n: int) -> GroupElement:
    return GroupElement(_check_n(n), np.eye(n + 1))


def make_a(t: float, n: int = 2) -> GroupElement:
    d = np.ones(_check_n(n) + 1)
    d[0] = np.exp(t)
    d[n] = np.exp(-t)
    return GroupElement(n, np.diag(d))


def make_u(x, side: str = "upper", n: Optional[int] = None) -> GroupElement:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = _check_n(len(x) + 1 if n is None else n)
    if x.shape != (n - 1,):
        raise ValueError(f"u(x) for n={n} needs x in R^{n - 1}")
    m = np.eye(n + 1)
    m[0, 1:n] = x
    m[1:n, n] = x
    m[0, n] = 0.5 * float(x @ x)
    if side == "lower":
        m = m.T.copy()
    elif side != "upper":
        raise ValueError("side must be 'upper' or 'lower'")
    return GroupElement(n, m)


def make_m(rot, n: Optional[int] = None) -> GroupElement:
    """Element of M acting on the x-block by the orthogonal matrix ``rot``.

    For n = 3 a scalar is read as a rotation angle.
    """
    if np.ndim(rot) == 0:
        th = float(rot)
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        n = 3
    rot = np.atleast_2d(np.asarray(rot, dtype=float))
    n = _check_n(rot.shape[0] + 1 if n is None else n)
    m = np.eye(n + 1)
    m[1:n, 1:n] = rot
    return GroupElement(n, m)


def make_k(rot: np.ndarray) -> GroupElement:
    """Element of K acting as the n x n orthogonal matrix ``rot`` on the complement of e_y + e_z.

    ``rot`` is expressed in the orthonormal frame ((e_y - e_z)/sqrt2, e_x1, ...).
    """
    rot = np.asarray(rot, dtype=float)
    n = _check_n(rot.shape[0])
    C = timelike_frame(n)
    blk = np.eye(n + 1)
    blk[1:, 1:] = rot
    # C^{-1} = eta C^T J with eta = diag(1, -1, ..., -1)
    eta = np.diag([1.0] + [-1.0] * n)
    Cinv = eta @ C.T @ gram(n)
    return GroupElement(n, C @ blk @ Cinv)


def weyl(n: int) -> GroupElement:
    """Fixed representative of the Weyl element: swaps y and z, negates x_1.

    Any M-conjugate would serve equally well; this one is an involution
    inverting A and lies in the SO(2,1) block on (y, x_1, z).
    """
    m = np.zeros((n + 1, n + 1))
    m[0, n] = m[n, 0] = 1.0
    for i in range(1, n):
        m[i, i] = 1.0
    m[1, 1] = -1.0
    return GroupElement(_check_n(n), m)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    if g.n != h.n:
        raise ValueError(f"dimension mismatch: n={g.n} vs n={h.n}")
    return GroupElement(g.n, g.mat @ h.mat)


def invert(g: GroupElement) -> GroupElement:
    J = gram(g.n)
    # J is its own inverse
    return GroupElement(g.n, J @ g.mat.T @ J)


def form_residual(g: GroupElement) -> float:
    J = gram(g.n)
    return float(np.linalg.norm(g.mat.T @ J @ g.mat - J))


def is_in_group(g: GroupElement, tol: float = TOL.group) -> bool:
    return form_residual(g) <= tol


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of SO(dim)."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_generator(n: int, rng: np.random.Generator, scale: float = 0.5) -> GroupElement:
    """One random factor drawn from A, U+, U- or K."""
    kind = rng.integers(4)
    if kind == 0:
        return make_a(rng.uniform(-scale, scale), n)
    if kind == 3:
        return make_k(random_rotation(n, rng))
    x = rng.uniform(-scale, scale, size=n - 1)
    return make_u(x, "upper" if kind == 1 else "lower")


def random_element(n: int, rng: np.random.Generator, length: int = 6,
                   scale: float = 0.5) -> GroupElement:
    g = identity(n)
    for _ in range(length):
        g = g @ random_generator(n, rng, scale)
    return g


# --------------------------------------------------------------------------
# factorizations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BruhatResult:
    cell: str  # "big" or "w"
    p_minus: GroupElement
    u_plus: Optional[GroupElement]

    @property
    def big_cell(self) -> bool:
        return self.cell == "big"


def bruhat_decompose(g: GroupElement) -> BruhatResult:
    """Split g = p- u(x) on the big cell P-U+, or flag the w-cell.

    The first row of any p- is a multiple of e_0, so the first row of
    p- u(x) is g[0,0] * (1, x, |x|^2/2).  Membership in the big cell is
    therefore decided by g[0,0] alone and x = g[0,1:n] / g[0,0].
    """
    n = g.n
    pivot = g.mat[0, 0]
    if abs(pivot) <= TOL.bruhat_cell:
        if abs(pivot) > TOL.bruhat_floor:
            raise NearCellBoundary(f"|g[0,0]| = {abs(pivot):.3e} is too close to the w-cell")
        # g = p- w with p- = g w^{-1}
        w = weyl(n)
        return BruhatResult("w", g @ invert(w), None)
    x = g.mat[0, 1:n] / pivot
    u = make_u(x)
    return BruhatResult("big", g @ invert(u), u)


def pminus_factor(p: GroupElement, tol: float = 1e-9):
    """Split p in P- as u_minus * z with u_minus in U- and z in Z(A) = AM."""
    n = p.n
    m = p.mat
    scale = max(1.0, float(np.abs(m).max()))
    upper = np.concatenate([m[0, 1:], m[1:n, n]])
    if np.abs(upper).max() > tol * scale:
        raise NotInSubgroup("matrix is not lower block-triangular, so not in P-")
    lam = m[0, 0]
    y = m[1:n, 0] / lam
    zmat = np.zeros_like(m)
    zmat[0, 0] = lam
    zmat[n, n] = 1.0 / lam
    zmat[1:n, 1:n] = m[1:n, 1:n]
    return make_u(y, "lower"), GroupElement(n, zmat)


def _boost_t(g: GroupElement) -> float:
    b = base_vector(g.n)
    c = float(b @ gram(g.n) @ g.mat @ b) / 2.0
    if c < 1.0 - 1e-9:
        raise NotInSubgroup("element reverses time orientation; KAK needs the identity component")
    return float(np.arccosh(max(c, 1.0)))


def kak_decompose(g: GroupElement):
    """Cartan decomposition g = k1 a_t k2 with t >= 0."""
    n = g.n
    C = timelike_frame(n)
    eta = np.diag([1.0] + [-1.0] * n)
    h = eta @ C.T @ gram(n) @ g.mat @ C   # g in the frame where J = eta
    col = h[:, 0]
    t = _boost_t(g)
    sh = np.sinh(t)
    rot = np.eye(n)
    if sh > 1e-12:
        xi = col[1:] / np.linalg.norm(col[1:])
        v = np.zeros(n)
        v[0] = 1.0
        v = v - xi
        vv = float(v @ v)
        if vv > 1e-30:
            # Householder sends e_1 to xi; flipping the last column restores det = +1
            rot = np.eye(n) - 2.0 * np.outer(v, v) / vv
            rot[:, -1] *= -1.0
    else:
        t = 0.0
    k1 = make_k(rot)
    k2 = invert(make_a(t, n)) @ invert(k1) @ g
    return k1, t, k2
