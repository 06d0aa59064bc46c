import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from horoflow import _kernels
from horoflow.errors import IterationCap, NotInSubgroup
from horoflow.lattice_quotient import (GENERATORS, MobiusElement, base_point, base_points,
                                       fiber_coordinates, from_mobius, height,
                                       in_fundamental_domain, mobius_a, mobius_m, mobius_u,
                                       quotient_matrix, reduce, reduce_batch, reduce_mobius,
                                       to_mobius)
from horoflow.lie_core import (GroupElement, identity, make_a, make_k, make_m, make_u,
                               random_element, random_rotation)

ns = st.sampled_from([2, 3])
seeds = st.integers(0, 2**32 - 1)
LETTERS = {2: ["T", "T^-1", "S"], 3: ["T", "T^-1", "Ti", "Ti^-1", "S", "E"]}


def lattice_word(n, rng, length):
    m = np.eye(2, dtype=complex)
    for letter in rng.choice(LETTERS[n], length):
        m = GENERATORS[letter] @ m
    return MobiusElement(n, m.real if n == 2 else m)


def same_up_to_sign(a, b, tol):
    return min(np.abs(a - b).max(), np.abs(a + b).max()) <= tol


def test_mobius_images():
    t, x = 0.7, np.array([0.3, -1.1])
    assert same_up_to_sign(to_mobius(make_a(t, 3)).mat, mobius_a(t, 3).mat, 1e-13)
    assert same_up_to_sign(to_mobius(make_u(x)).mat, mobius_u(x).mat, 1e-13)
    assert same_up_to_sign(to_mobius(make_m(0.4)).mat, mobius_m(0.4).mat, 1e-13)
    assert same_up_to_sign(to_mobius(identity(2)).mat, np.eye(2), 0)


@given(ns, seeds)
def test_isogeny_round_trip(n, seed):
    g = random_element(n, np.random.default_rng(seed))
    back = from_mobius(to_mobius(g)).mat
    assert np.abs(back - g.mat).max() <= 1e-10 * np.abs(g.mat).max() ** 2


@given(ns, seeds)
def test_isogeny_is_homomorphism(n, seed):
    rng = np.random.default_rng(seed)
    g, h = random_element(n, rng), random_element(n, rng)
    lhs = to_mobius(g @ h).mat
    rhs = to_mobius(g).mat @ to_mobius(h).mat
    assert same_up_to_sign(lhs, rhs, 1e-9 * max(1.0, np.abs(rhs).max()))


def test_determinant_check():
    with pytest.raises(ValueError):
        MobiusElement(2, np.diag([2.0, 1.0]))
    with pytest.raises(ValueError):
        MobiusElement(2, np.diag([1j, -1j]))


def test_to_mobius_rejects_non_identity_component():
    flip = GroupElement(2, np.diag([-1.0, 1.0, -1.0]))
    with pytest.raises(NotInSubgroup):
        to_mobius(flip)


def test_reduce_identity():
    for n in (2, 3):
        q = reduce(identity(n))
        assert q.word == ()
        assert np.allclose(q.base, (0.0, 1.0) if n == 2 else (0.0, 0.0, 1.0))
        assert height(q) == pytest.approx(1.0)


def test_reduce_translation():
    q = reduce(make_u([5.0]))
    assert q.word == ("T",) * 5
    assert np.allclose(q.base, (0.0, 1.0))


@pytest.mark.parametrize("n", [2, 3])
def test_long_words(n, rng):
    for _ in range(50):
        g = random_element(n, rng, length=40)
        q = reduce(g)
        assert in_fundamental_domain(q.base, n)
        rec = q.word_matrix() @ quotient_matrix(g)
        assert np.abs(rec - q.rep.mat).max() <= 1e-8 * max(1.0, np.abs(q.rep.mat).max())
        if n == 2:
            assert q.height >= math.sqrt(3) / 2 - 1e-12


@given(ns, seeds, st.integers(1, 12))
def test_gamma_equivariance(n, seed, length):
    rng = np.random.default_rng(seed)
    g = random_element(n, rng)
    gamma = from_mobius(lattice_word(n, rng, length))
    a, b = reduce(g).base, reduce(g @ gamma).base
    assert np.abs(np.subtract(a, b)).max() <= 1e-8


@given(ns, seeds)
def test_idempotent(n, seed):
    q = reduce(random_element(n, np.random.default_rng(seed)))
    again = reduce_mobius(q.rep)
    assert again.word in ((), ("S",))    # ("S",) only for a boundary tie
    assert np.abs(np.subtract(again.base, q.base)).max() <= 1e-9


@given(ns, seeds)
def test_height_ignores_k(n, seed):
    rng = np.random.default_rng(seed)
    g = random_element(n, rng)
    # the stabilizer of the base point is K conjugated by a_s, s = -log(2)/2
    s = -0.5 * math.log(2)
    k = make_a(s, n) @ make_k(random_rotation(n, rng)) @ make_a(-s, n)
    assert reduce(k @ g).height == pytest.approx(reduce(g).height, rel=1e-9)


def test_iteration_cap():
    with pytest.raises(IterationCap):
        reduce(make_a(8.0, 2) @ make_u([0.1234567]), cap=1)


def test_batch_matches_scalar(rng):
    for n in (2, 3):
        gs = [random_element(n, rng) for _ in range(200)]
        mats = np.array([quotient_matrix(g) for g in gs])
        out = reduce_batch(mats, n)
        ref = np.array([reduce(g).base for g in gs])
        assert np.abs(base_points(out, n) - ref).max() <= 1e-9
        assert all(in_fundamental_domain(b, n) for b in base_points(out, n))


@pytest.mark.skipif(_kernels.compiled_backend is None, reason="extension not built")
def test_backends_agree(rng):
    for n in (2, 3):
        gs = [random_element(n, rng, length=10) for _ in range(500)]
        mats = np.array([quotient_matrix(g) for g in gs])
        a = reduce_batch(mats, n, backend=_kernels.python_backend)
        b = reduce_batch(mats, n, backend=_kernels.compiled_backend)
        assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(a).max())


def test_fiber_coordinates_shape(rng):
    g = [random_element(3, rng) for _ in range(20)]
    mats = reduce_batch(np.array([quotient_matrix(x) for x in g]), 3)
    f = fiber_coordinates(mats, 3)
    assert np.allclose(np.linalg.norm(f, axis=1), 1.0)
    th = fiber_coordinates(reduce_batch(np.array([quotient_matrix(random_element(2, rng))
                                                  for _ in range(20)]), 2), 2)
    assert np.all((0 <= th) & (th < 2 * np.pi))


def test_base_point_formula():
    m = np.array([[2.0, 1.0], [1.0, 1.0]])
    z = (2j + 1) / (1j + 1)
    x, y = base_point(m, 2)
    assert x == pytest.approx(z.real) and y == pytest.approx(z.imag)


def test_haar_cusp_fraction():
    from horoflow.flow_experiments import haar_reference, cusp_fraction
    lam = haar_reference(2, 100_000, 3)
    p = 3 / (2 * math.pi)
    assert abs(cusp_fraction(lam, 2.0) - p) <= 0.01
    assert cusp_fraction(lam, 0.8) == 1.0
