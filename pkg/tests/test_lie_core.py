import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from horoflow.errors import NotInSubgroup
from horoflow.lie_core import (GroupElement, bruhat_decompose, compose, form_residual, gram,
                               identity, invert, is_in_group, kak_decompose, make_a, make_k,
                               make_m, make_u, pminus_factor, random_element, random_rotation,
                               weyl)

ns = st.sampled_from([2, 3])
reals = st.floats(-3, 3, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


def close(g, h, tol):
    return np.abs(g.mat - h.mat).max() <= tol


def test_a_at_zero_is_identity():
    assert close(make_a(0.0, 3), identity(3), 0)


def test_a_additive():
    assert close(make_a(0.3) @ make_a(0.7), make_a(1.0), 1e-14)


def test_u_top_right_entry():
    assert make_u([1.0, 1.0]).mat[0, 3] == 1.0


def test_u_zero_is_identity():
    assert close(make_u([0.0, 0.0]), identity(3), 0)


def test_u_sum_oracle():
    # 4x4 product written out by hand for n = 3
    x, y = np.array([0.2, -1.0]), np.array([3.0, 0.5])
    s = x + y
    expect = np.array([[1, s[0], s[1], 0.5 * s @ s],
                       [0, 1, 0, s[0]],
                       [0, 0, 1, s[1]],
                       [0, 0, 0, 1]])
    assert np.allclose((make_u(x) @ make_u(y)).mat, expect, atol=1e-14, rtol=0)


def test_lower_is_transpose():
    x = np.array([0.4, -0.1])
    assert np.array_equal(make_u(x, "lower").mat, make_u(x).mat.T)


def test_invert_a():
    assert close(invert(make_a(1.3, 3)), make_a(-1.3, 3), 1e-15)


def test_membership():
    assert is_in_group(make_a(5.0))
    assert not is_in_group(GroupElement(2, np.diag([2.0, 1.0, 1.0])))


def test_fifty_generators_in_group(rng):
    assert is_in_group(random_element(3, rng, length=50), tol=1e-8)


def test_compose_inverse_and_associativity(rng):
    for n in (2, 3):
        g, h, k = (random_element(n, rng) for _ in range(3))
        assert close(compose(g, invert(g)), identity(n), 1e-10)
        lhs, rhs = (g @ h) @ k, g @ (h @ k)
        assert np.abs(lhs.mat - rhs.mat).max() <= 1e-10 * np.abs(lhs.mat).max()


def test_weyl_is_in_group_and_swaps():
    for n in (2, 3):
        w = weyl(n)
        assert is_in_group(w)
        assert w.mat[0, n] != 0 and w.mat[n, 0] != 0


def test_bruhat_unipotent():
    u = make_u([0.3, -0.8])
    br = bruhat_decompose(u)
    assert br.big_cell
    assert close(br.p_minus, identity(3), 1e-14)
    assert close(br.u_plus, u, 1e-14)


def test_bruhat_weyl_cell():
    assert not bruhat_decompose(weyl(3)).big_cell


def test_pminus_trivial_cases():
    um, z = pminus_factor(make_a(0.9, 3))
    assert close(um, identity(3), 1e-14) and close(z, make_a(0.9, 3), 1e-14)
    low = make_u([0.5, 0.2], "lower")
    um, z = pminus_factor(low)
    assert close(um, low, 1e-14) and close(z, identity(3), 1e-14)


def test_pminus_rejects_upper():
    with pytest.raises(NotInSubgroup):
        pminus_factor(make_u([1.0]))


def test_kak_of_a():
    k1, t, k2 = kak_decompose(make_a(2.5, 3))
    assert t == pytest.approx(2.5, abs=1e-12)


def test_kak_of_k(rng):
    k = make_k(random_rotation(3, rng))
    assert kak_decompose(k)[1] == pytest.approx(0.0, abs=1e-7)


@given(ns, seeds)
def test_kak_matches_hyperboloid_distance(n, seed):
    g = random_element(n, np.random.default_rng(seed))
    b = np.zeros(n + 1)
    b[0] = b[n] = 1 / math.sqrt(2)    # Q(b) = 1
    B = 0.5 * (gram(n))
    dist = math.acosh(max(1.0, 2 * float(b @ B @ (g.mat @ b))))
    assert kak_decompose(g)[1] == pytest.approx(dist, rel=1e-9, abs=1e-9)


@given(ns, seeds)
def test_constructors_preserve_form(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3, 3, n - 1)
    els = [make_a(rng.uniform(-3, 3), n), make_u(x), make_u(x, "lower"),
           make_k(random_rotation(n, rng)), weyl(n)]
    if n == 3:
        els.append(make_m(rng.uniform(0, 2 * np.pi)))
    for g in els:
        assert form_residual(g) <= 1e-9


@given(ns, reals, seeds)
def test_weight_relation(n, t, seed):
    x = np.random.default_rng(seed).uniform(-2, 2, n - 1)
    lhs = make_a(t, n) @ make_u(x) @ make_a(-t, n)
    assert close(lhs, make_u(math.exp(t) * x), 1e-10 * max(1.0, math.exp(2 * t)))


@given(ns, seeds)
def test_bruhat_round_trip(n, seed):
    g = random_element(n, np.random.default_rng(seed))
    br = bruhat_decompose(g)
    rec = br.p_minus @ (br.u_plus if br.big_cell else weyl(n))
    scale = np.abs(g.mat).max()
    assert np.abs(rec.mat - g.mat).max() <= 1e-10 * scale
    um, z = pminus_factor(br.p_minus)
    assert np.abs((um @ z).mat - br.p_minus.mat).max() <= 1e-9 * np.abs(br.p_minus.mat).max()
    # z centralizes A
    a = make_a(0.7, n)
    assert np.abs((z @ a).mat - (a @ z).mat).max() <= 1e-9 * scale


@given(ns, seeds)
def test_kak_round_trip(n, seed):
    g = random_element(n, np.random.default_rng(seed))
    k1, t, k2 = kak_decompose(g)
    assert t >= 0
    assert np.abs((k1 @ make_a(t, n) @ k2).mat - g.mat).max() <= 1e-9 * max(1, np.abs(g.mat).max())
    assert kak_decompose(invert(g))[1] == pytest.approx(t, rel=1e-9, abs=1e-9)
    for k in (k1, k2):
        assert is_in_group(k, 1e-8)
        # K fixes the timelike vector e_y + e_z
        v = np.zeros(n + 1)
        v[0] = v[n] = 1.0
        assert np.abs(k.mat @ v - v).max() <= 1e-8
