"""The representation V = sum_d wedge^d g of G under wedge^d Ad.

The Lie algebra basis consists of a_t-eigenvectors: E_i (weight +1,
generating U+), F_i = E_i^T (weight -1), H (the generator of A) and the
rotations R_ij of the x-block (weight 0).  Each weight block is
orthonormalized for the K-invariant inner product tr(X' Y'^T), where
X' is X written in the frame in which the form is diag(1, -1, ..., -1).
Wedge monomials of this basis are declared orthonormal, which makes K act
orthogonally on V and turns each q_mu into a coordinate mask.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .config import TOL
from .errors import DegenerateOrbit
from .lie_core import GroupElement, gram, make_u, timelike_frame


def _lie_algebra_basis(n: int):
    N = n + 1
    mats, weights, names = [], [], []
    for i in range(1, n):
        E = np.zeros((N, N))
        E[0, i] = E[i, n] = 1.0
        mats.append(E)
        weights.append(1)
        names.append(f"E{i}")
    H = np.zeros((N, N))
    H[0, 0], H[n, n] = 1.0, -1.0
    mats.append(H)
    weights.append(0)
    names.append("H")
    for i, j in combinations(range(1, n), 2):
        R = np.zeros((N, N))
        R[i, j], R[j, i] = -1.0, 1.0
        mats.append(R)
        weights.append(0)
        names.append(f"R{i}{j}")
    for i in range(1, n):
        mats.append(mats[i - 1].T.copy())
        weights.append(-1)
        names.append(f"F{i}")
    mats = np.array(mats)
    # orthonormalize inside each weight block for the K-invariant product
    C = timelike_frame(n)
    Cinv = np.linalg.inv(C)
    primed = np.einsum("ab,kbc,cd->kad", Cinv, mats, C).reshape(len(mats), -1)
    w = np.array(weights)
    out = mats.copy()
    for mu in (1, 0, -1):
        idx = np.flatnonzero(w == mu)
        G = primed[idx] @ primed[idx].T
        if np.array_equal(G, np.diag(np.diag(G))):
            T = np.diag(np.diag(G) ** -0.5)      # exact, keeps a_t diagonal on V
        else:
            evals, evecs = np.linalg.eigh(G)
            T = evecs @ np.diag(evals ** -0.5) @ evecs.T   # symmetric G^{-1/2}
        out[idx] = np.einsum("ij,jab->iab", T, mats[idx])
    return out, w, names


def compound(A: np.ndarray, d: int) -> np.ndarray:
    """d-th compound matrix: the matrix of wedge^d A on the monomial basis."""
    m = A.shape[0]
    subsets = list(combinations(range(m), d))
    idx = np.array(subsets)
    sub = A[idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(sub)


@dataclass(frozen=True, eq=False)
class RepSpace:
    n: int
    dim_g: int
    algebra: np.ndarray                 # (dim_g, n+1, n+1) basis of g
    algebra_weights: np.ndarray
    basis: Tuple[Tuple[int, ...], ...]  # wedge monomials as index tuples
    weights: np.ndarray                 # integer weight of each monomial
    degrees: np.ndarray
    blocks: Tuple[Tuple[int, int, int], ...] = field(repr=False)  # (degree, start, stop)
    _pinv: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def ad_matrix(self, g: GroupElement) -> np.ndarray:
        if g.n != self.n:
            raise ValueError("group element and representation have different n")
        ginv = gram(self.n) @ g.mat.T @ gram(self.n)
        img = np.einsum("ab,kbc,cd->kad", g.mat, self.algebra, ginv)
        return self._pinv @ img.reshape(self.dim_g, -1).T

    def matrix(self, g: GroupElement) -> np.ndarray:
        """The dim x dim matrix of g acting on V (block diagonal by degree)."""
        ad = self.ad_matrix(g)
        out = np.zeros((self.dim, self.dim))
        for d, a, b in self.blocks:
            out[a:b, a:b] = compound(ad, d)
        return out

    def vector(self, coords) -> "WedgeVector":
        return WedgeVector(np.asarray(coords, dtype=float), self)

    def basis_vector(self, i: int) -> "WedgeVector":
        c = np.zeros(self.dim)
        c[i] = 1.0
        return WedgeVector(c, self)

    def wedge(self, elements: Sequence[np.ndarray]) -> "WedgeVector":
        """Wedge product of Lie algebra elements given as (n+1)x(n+1) matrices."""
        d = len(elements)
        cols = np.array([self._pinv @ np.asarray(X, float).ravel() for X in elements]).T
        out = np.zeros(self.dim)
        for _, a, b in (blk for blk in self.blocks if blk[0] == d):
            idx = np.array(self.basis[a:b])
            out[a:b] = np.linalg.det(cols[idx])
        return WedgeVector(out, self)

    def top_wedge(self) -> "WedgeVector":
        return self.basis_vector(self.dim - 1)

    def max_unipotent_degree(self) -> int:
        """Exact degree in x of the entries of u(x) acting on V."""
        rng = np.random.default_rng(1)
        x = rng.uniform(0.5, 1.5, size=self.n - 1)
        mat = self.matrix(make_u(x))
        nz = np.abs(mat - np.eye(self.dim)) > 1e-12
        wi, wj = np.meshgrid(self.weights, self.weights, indexing="ij")
        return int((wi - wj)[nz].max())

    def polynomial_degree_bound(self) -> int:
        """Degree n_1 of s -> u(P(s)) v for polynomials P of degree <= n."""
        return self.n * self.max_unipotent_degree()


@lru_cache(maxsize=None)
def build_rep(n: int) -> RepSpace:
    algebra, aw, _ = _lie_algebra_basis(n)
    dim_g = len(algebra)
    flat = algebra.reshape(dim_g, -1).T
    # orthonormal columns: the transpose is the pseudo-inverse and keeps the sparsity exact
    ortho = np.abs(flat.T @ flat - np.eye(dim_g)).max() <= 1e-14
    pinv = flat.T.copy() if ortho else np.linalg.pinv(flat)
    basis: List[Tuple[int, ...]] = []
    blocks = []
    for d in range(1, dim_g + 1):
        start = len(basis)
        basis.extend(combinations(range(dim_g), d))
        blocks.append((d, start, len(basis)))
    weights = np.array([int(aw[list(m)].sum()) for m in basis])
    degrees = np.array([len(m) for m in basis])
    for arr in (algebra, aw, weights, degrees, pinv):
        arr.setflags(write=False)
    return RepSpace(n, dim_g, algebra, aw, tuple(basis), weights, degrees, tuple(blocks), pinv)


@dataclass(frozen=True, eq=False)
class WedgeVector:
    coords: np.ndarray
    rep: RepSpace

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.shape != (self.rep.dim,):
            raise ValueError(f"expected {self.rep.dim} coordinates, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __add__(self, other):
        return WedgeVector(self.coords + other.coords, self.rep)

    def __sub__(self, other):
        return WedgeVector(self.coords - other.coords, self.rep)

    def __mul__(self, s: float):
        return WedgeVector(self.coords * s, self.rep)

    __rmul__ = __mul__


def act(g: GroupElement, v: WedgeVector) -> WedgeVector:
    return WedgeVector(v.rep.matrix(g) @ v.coords, v.rep)


def weight_project(v: WedgeVector, mu: int) -> WedgeVector:
    return WedgeVector(np.where(v.rep.weights == mu, v.coords, 0.0), v.rep)


def stable_project(v: WedgeVector):
    w = v.rep.weights
    c = v.coords
    return (WedgeVector(np.where(w < 0, c, 0.0), v.rep),
            WedgeVector(np.where(w == 0, c, 0.0), v.rep),
            WedgeVector(np.where(w > 0, c, 0.0), v.rep))


def top_weight(v: WedgeVector, rel: float = TOL.weight_block) -> int:
    """max{mu : q_mu(v) != 0}, nonzero meaning block norm > rel * |v|."""
    ref = rel * v.norm()
    present = [mu for mu in np.unique(v.rep.weights)
               if np.linalg.norm(v.coords[v.rep.weights == mu]) > ref]
    if not present:
        raise DegenerateOrbit("zero vector has no top weight")
    return int(max(present))


def leading_exponent_probe(w0: WedgeVector, h_grid) -> float:
    """Log-log slope of h -> |q_1(u(h e_1) w0)| as h -> 0+."""
    h = np.asarray(h_grid, dtype=float)
    if np.any(h <= 0) or np.any(np.diff(h) >= 0):
        raise ValueError("h_grid must be decreasing and positive")
    if np.log10(h[0] / h[-1]) < 2 - 1e-12:
        raise ValueError("h_grid must span at least two decades")
    rep = w0.rep
    e1 = np.zeros(rep.n - 1)
    e1[0] = 1.0
    mask = rep.weights == 1
    norms = np.array([np.linalg.norm((rep.matrix(make_u(hh * e1)) @ w0.coords)[mask])
                      for hh in h])
    if np.all(norms < TOL.probe_floor):
        raise DegenerateOrbit("q_1 component vanishes along the whole grid")
    slope, _ = np.polyfit(np.log(h), np.log(np.maximum(norms, 1e-300)), 1)
    return float(slope)


def so_m1_wedge(rep: RepSpace, m: int) -> WedgeVector:
    """p_0 for the block SO(m,1) acting on (y, x_1, ..., x_{m-1}, z)."""
    n = rep.n
    if not 2 <= m <= n:
        raise ValueError("need 2 <= m <= n")
    N = n + 1
    gens = []
    for i in range(1, m):
        E = np.zeros((N, N))
        E[0, i] = E[i, n] = 1.0
        gens += [E, E.T.copy()]
    H = np.zeros((N, N))
    H[0, 0], H[n, n] = 1.0, -1.0
    gens.append(H)
    for i, j in combinations(range(1, m), 2):
        R = np.zeros((N, N))
        R[i, j], R[j, i] = -1.0, 1.0
        gens.append(R)
    return rep.wedge(gens)


def weight_blocks(rep: RepSpace) -> Dict[int, np.ndarray]:
    return {int(mu): np.flatnonzero(rep.weights == mu) for mu in np.unique(rep.weights)}
