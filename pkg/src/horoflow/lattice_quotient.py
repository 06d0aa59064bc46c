"""Transport to the Möbius model and reduction to the fundamental domain.

The isogeny identifies v = (y, x_1, x_2, z) with the Hermitian matrix
[[2y, x_1 + i x_2], [x_1 - i x_2, z]]; an SL(2) matrix m acts by
X -> m X m^*, which preserves the determinant 2yz - |x|^2.  Under this
map a_t -> diag(e^{t/2}, e^{-t/2}) and u(x) -> [[1, x_1 + i x_2], [0, 1]].

Points of G/Gamma: the coset g Gamma is represented by the right coset
Gamma g^{-1}, i.e. by the matrix h = mob(g)^{-1} modulo left
multiplication by Gamma.  ``reduce`` picks gamma with gamma h sending the
base point (i or j) into the fundamental domain.  Left translation of
g Gamma by x corresponds to h -> h mob(x)^{-1}.  The base point i (or j)
is the image of e_y/2 + e_z, so its stabilizer is a_s K a_{-s} with
s = -log(2)/2 rather than K itself; heights are invariant under left
multiplication of g by that conjugate.

Fundamental domains: SL(2, Z) uses {|Re z| <= 1/2, |z| >= 1}; the Picard
group PSL(2, Z[i]) uses {|Re z| <= 1/2, 0 <= Im z <= 1/2, |z|^2 + t^2 >= 1}.
Boundary ties are broken toward nonnegative real parts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels
from .config import TOL
from .errors import IterationCap, NotInSubgroup
from .lie_core import GroupElement, invert

ITERATION_CAP = 10_000
SQRT3_2 = math.sqrt(3.0) / 2.0

# letters of reduction words: each acts by left multiplication
GENERATORS = {
    "T": np.array([[1, 1], [0, 1]], dtype=complex),
    "T^-1": np.array([[1, -1], [0, 1]], dtype=complex),
    "Ti": np.array([[1, 1j], [0, 1]], dtype=complex),
    "Ti^-1": np.array([[1, -1j], [0, 1]], dtype=complex),
    "S": np.array([[0, -1], [1, 0]], dtype=complex),
    "E": np.array([[1j, 0], [0, -1j]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class MobiusElement:
    n: int
    mat: np.ndarray

    def __post_init__(self):
        m = np.array(self.mat, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("Möbius matrices are 2x2")
        if abs(np.linalg.det(m) - 1) > TOL.mobius_det * max(1.0, float(np.abs(m).max()) ** 2):
            raise ValueError(f"determinant {np.linalg.det(m)} is not 1")
        if self.n == 2 and np.abs(m.imag).max() > 0:
            raise ValueError("n = 2 Möbius matrices must be real")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    def __matmul__(self, other):
        return MobiusElement(self.n, self.mat @ other.mat)

    def inv(self):
        a, b, c, d = self.mat.ravel()
        return MobiusElement(self.n, np.array([[d, -b], [-c, a]]))


def mobius_a(t: float, n: int = 2) -> MobiusElement:
    return MobiusElement(n, np.diag([math.exp(t / 2), math.exp(-t / 2)]))


def mobius_u(x) -> MobiusElement:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = complex(x[0], x[1]) if len(x) == 2 else complex(x[0])
    n = len(x) + 1
    m = np.array([[1, w], [0, 1]], dtype=complex)
    return MobiusElement(n, m if n == 3 else m.real)


def mobius_m(theta: float) -> MobiusElement:
    """Image of the rotation of R^2 by theta (an element of M, n = 3)."""
    return MobiusElement(3, np.diag([np.exp(0.5j * theta), np.exp(-0.5j * theta)]))


def _herm(v: np.ndarray, n: int) -> np.ndarray:
    w = complex(v[1], v[2]) if n == 3 else complex(v[1])
    return np.array([[2 * v[0], w], [np.conj(w), v[n]]], dtype=complex)


def _unherm(X: np.ndarray, n: int) -> np.ndarray:
    if n == 3:
        return np.array([X[0, 0].real / 2, X[0, 1].real, X[0, 1].imag, X[1, 1].real])
    return np.array([X[0, 0].real / 2, X[0, 1].real, X[1, 1].real])


def from_mobius(m: MobiusElement) -> GroupElement:
    n = m.n
    cols = []
    for j in range(n + 1):
        e = np.zeros(n + 1)
        e[j] = 1.0
        cols.append(_unherm(m.mat @ _herm(e, n) @ m.mat.conj().T, n))
    return GroupElement(n, np.array(cols).T)


def to_mobius(g: GroupElement) -> MobiusElement:
    """Inverse of ``from_mobius`` up to the sign ambiguity of PSL(2)."""
    n = g.n
    G = g.mat
    last = n  # index of z
    col = lambda j: complex(G[1, j], G[2, j]) if n == 3 else complex(G[1, j])
    aa = G[0, 0]             # |a|^2
    cc = G[last, 0] / 2.0    # |c|^2
    if min(aa, cc) < -1e-9 or aa + cc <= 0:
        raise NotInSubgroup("element is not in the identity component")
    if aa >= cc:
        a = math.sqrt(aa)
        c = np.conj(col(0) / 2.0) / a            # a conj(c) = (g10 + i g20)/2
        b = complex(G[0, 1], G[0, 2] if n == 3 else 0.0) / a   # a conj(b) = g01 - i g02
        d = np.conj((col(1) - b * np.conj(c)) / a)   # a conj(d) + b conj(c) = g11 + i g21
    else:
        c = math.sqrt(cc)
        a = (col(0) / 2.0) / c
        # c conj(d) = (g_{z,1} - i g_{z,2}) / 2
        dconj = complex(G[last, 1], -G[last, 2] if n == 3 else 0.0) / 2.0 / c
        d = np.conj(dconj)
        b = (col(1) - a * dconj) / c
    m = np.array([[a, b], [c, d]], dtype=complex)
    det = np.linalg.det(m)
    m = m / np.sqrt(det)
    if n == 2:
        if np.abs(m.imag).max() > 1e-8 * max(1.0, np.abs(m).max()):
            raise NotInSubgroup("element is not in the identity component")
        m = m.real.astype(complex)
    out = MobiusElement(n, m.real if n == 2 else m)
    back = from_mobius(out).mat
    if np.abs(back - G).max() > 1e-8 * max(1.0, float(np.abs(G).max()) ** 2):
        raise NotInSubgroup("element is not in the identity component")
    return out


# --------------------------------------------------------------------------
# base points
# --------------------------------------------------------------------------

def base_point(mat: np.ndarray, n: int) -> Tuple[float, ...]:
    """Image of i (n = 2) or j (n = 3) under the matrix: (x, y) or (x, y, t)."""
    a, b, c, d = np.asarray(mat, dtype=complex).ravel()
    D = abs(c) ** 2 + abs(d) ** 2
    z = (b * np.conj(d) + a * np.conj(c)) / D
    if n == 2:
        return (z.real, 1.0 / D)
    return (z.real, z.imag, 1.0 / D)


def in_fundamental_domain(base, n: int, eps: float = TOL.fundamental_domain) -> bool:
    if n == 2:
        x, y = base
        return abs(x) <= 0.5 + eps and x * x + y * y >= 1 - eps
    x, y, t = base
    return abs(x) <= 0.5 + eps and -eps <= y <= 0.5 + eps and x * x + y * y + t * t >= 1 - eps


@dataclass(frozen=True, eq=False)
class QuotientPoint:
    n: int
    rep: MobiusElement
    word: Tuple[str, ...]
    base: Tuple[float, ...]
    g: Optional[GroupElement] = None

    @property
    def height(self) -> float:
        return self.base[-1]

    def word_matrix(self) -> np.ndarray:
        m = np.eye(2, dtype=complex)
        for letter in self.word:
            m = GENERATORS[letter] @ m
        return m

    def csv_row(self) -> List[float]:
        return [*self.base, *np.asarray(self.rep.mat).ravel().view(float)] if self.n == 3 \
            else [*self.base, *np.asarray(self.rep.mat).real.ravel()]


def _nearest(x: float) -> int:
    return int(math.ceil(x - 0.5))


def reduce_matrix(h: np.ndarray, n: int, cap: int = ITERATION_CAP):
    """Reduce the SL(2) matrix h (acting on the base point) with word bookkeeping."""
    m = np.array(h, dtype=complex)
    word: List[str] = []
    for _ in range(cap):
        base = base_point(m, n)
        moved = False
        k = _nearest(base[0])
        if k:
            word += ["T^-1" if k > 0 else "T"] * abs(k)
            m = np.array([[1, -k], [0, 1]], dtype=complex) @ m
        if n == 3:
            ki = _nearest(base[1])
            if ki:
                word += ["Ti^-1" if ki > 0 else "Ti"] * abs(ki)
                m = np.array([[1, -1j * ki], [0, 1]], dtype=complex) @ m
        base = base_point(m, n)
        r2 = sum(c * c for c in base)
        if r2 < 1.0:
            word.append("S")
            m = GENERATORS["S"] @ m
            moved = True
        elif n == 2 and base[0] < 0 and r2 <= 1.0 + 1e-12:
            word.append("S")
            m = GENERATORS["S"] @ m
        if not moved:
            break
    else:
        raise IterationCap(f"reduction did not terminate within {cap} steps")
    if n == 3:
        x, y, _ = base_point(m, n)
        if y < 0 or (y == 0 and x < 0):
            word.append("E")
            m = GENERATORS["E"] @ m
    return m, tuple(word)


def quotient_matrix(g: GroupElement) -> np.ndarray:
    """The matrix h = mob(g)^{-1} representing the coset g Gamma."""
    return to_mobius(invert(g)).mat


def reduce(g: GroupElement, cap: int = ITERATION_CAP) -> QuotientPoint:
    n = g.n
    m, word = reduce_matrix(quotient_matrix(g), n, cap)
    rep = MobiusElement(n, m.real if n == 2 else m)
    return QuotientPoint(n, rep, word, base_point(m, n), g)


def reduce_mobius(h: MobiusElement, cap: int = ITERATION_CAP) -> QuotientPoint:
    m, word = reduce_matrix(h.mat, h.n, cap)
    rep = MobiusElement(h.n, m.real if h.n == 2 else m)
    return QuotientPoint(h.n, rep, word, base_point(m, h.n))


def height(q: QuotientPoint) -> float:
    return q.height


# --------------------------------------------------------------------------
# batch reduction (hot path)
# --------------------------------------------------------------------------

def reduce_batch(mats: np.ndarray, n: int, cap: int = ITERATION_CAP, backend=None) -> np.ndarray:
    """Reduce an (N, 2, 2) stack of matrices; returns the reduced stack.

    ``backend`` selects a kernel module explicitly (used by benchmarks
    and the cross-backend tests).
    """
    kern = backend or _kernels.backend
    mats = np.asarray(mats)
    if n == 2:
        re = np.ascontiguousarray(mats.real, dtype=float)
        a, b, c, d = (np.ascontiguousarray(re[:, i, j]) for i in (0, 1) for j in (0, 1))
        steps = kern.reduce_modular(a, b, c, d, cap)
        out = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2).astype(float)
    else:
        parts = []
        for i in (0, 1):
            for j in (0, 1):
                parts += [np.ascontiguousarray(mats[:, i, j].real, dtype=float),
                          np.ascontiguousarray(mats[:, i, j].imag, dtype=float)]
        steps = kern.reduce_picard(*parts, cap)
        ar, ai, br, bi, cr, ci, dr, di = parts
        out = np.empty((len(ar), 2, 2), dtype=complex)
        out[:, 0, 0] = ar + 1j * ai
        out[:, 0, 1] = br + 1j * bi
        out[:, 1, 0] = cr + 1j * ci
        out[:, 1, 1] = dr + 1j * di
    if np.any(np.asarray(steps) < 0):
        bad = int(np.sum(np.asarray(steps) < 0))
        raise IterationCap(f"{bad} points hit the {cap}-step reduction cap")
    return out


def base_points(mats: np.ndarray, n: int) -> np.ndarray:
    """Vectorized ``base_point`` for an (N, 2, 2) stack."""
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    D = np.abs(c) ** 2 + np.abs(d) ** 2
    z = (b * np.conj(d) + a * np.conj(c)) / D
    if n == 2:
        return np.stack([np.real(z), 1.0 / D], axis=1)
    return np.stack([z.real, z.imag, 1.0 / D], axis=1)


def fiber_coordinates(mats: np.ndarray, n: int) -> np.ndarray:
    """Fiber coordinate of each matrix over its base point.

    n = 2: angle in [0, 2 pi) of the image of the reference direction at i.
    n = 3: unit vector k sigma_3 k^* in S^2, where mats = n(z) a(t) k.
    """
    if n == 2:
        c, d = mats[:, 1, 0].real, mats[:, 1, 1].real
        return np.mod(-2.0 * np.arctan2(c, d), 2 * np.pi)
    base = base_points(mats, 3)
    z = base[:, 0] + 1j * base[:, 1]
    st = np.sqrt(base[:, 2])
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    ka, kb = (a - z * c) / st, (b - z * d) / st
    kc, kd = c * st, d * st
    m00 = np.abs(ka) ** 2 - np.abs(kb) ** 2
    m10 = kc * np.conj(ka) - kd * np.conj(kb)
    return np.stack([m10.real, m10.imag, m00.real], axis=1)
