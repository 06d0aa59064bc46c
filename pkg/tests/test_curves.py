import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from horoflow.curves import (SmoothCurve, contained_in_obstruction, eval_derivative,
                             normalizer_z, polynomial, polynomial_psi, remainder_bound,
                             rolle_constant, rolle_witness, sphere_affine_residual,
                             taylor_model, z_action)
from horoflow.errors import OrderOverflow, VanishingDerivative
from horoflow.lie_core import form_residual, make_a, make_m, make_u

seeds = st.integers(0, 2**32 - 1)


def trig(cos, sin, domain=(0.0, 1.0)):
    return SmoothCurve("trigonometric", (np.array(cos, float), np.array(sin, float)), domain)


def test_polynomial_derivative():
    c = polynomial([[0, 0], [1, 0], [0, 0.5]])
    assert np.allclose(eval_derivative(c, 2.0, 1), [1.0, 2.0])


def test_trig_period_four():
    c = trig([[0, 0], [1, 0]], [[0, 0], [0, 1]], (0.0, 6.0))   # (cos s, sin s)
    s = np.linspace(0, 6, 11)
    assert np.allclose(eval_derivative(c, s, 4), eval_derivative(c, s, 0), atol=1e-14)


def test_spline_matches_finite_difference():
    knots = np.linspace(0, 1, 9)
    c = SmoothCurve("cubic-spline", (knots, np.sin(3 * knots)), (0.0, 1.0))
    h = 1e-5
    s = np.linspace(0.1, 0.9, 7)
    fd = (eval_derivative(c, s + h) - eval_derivative(c, s - h)) / (2 * h)
    assert np.abs(fd - eval_derivative(c, s, 1)).max() < 1e-8


def test_spline_order_limit():
    knots = np.linspace(0, 1, 6)
    c = SmoothCurve("cubic-spline", (knots, knots ** 2), (0.0, 1.0))
    with pytest.raises(OrderOverflow):
        eval_derivative(c, 0.5, 4)


def test_bad_domain():
    with pytest.raises(ValueError):
        polynomial([[0.0], [1.0]], (1.0, 0.0))


def test_taylor_exact_for_polynomials():
    c = polynomial([[0.3, 1], [1, 0], [0, 0.5], [0.2, 0.1]])
    P = taylor_model(c, 0.4, 3)
    s = np.linspace(0, 1, 50)
    assert np.abs(P(s) - c(s)).max() < 1e-13


def test_taylor_remainder_bound():
    c = trig([[0, 0], [0, 0]], [[0, 0], [1, 0]], (-1.0, 1.0))    # (sin s, 0)
    P = taylor_model(c, 0.0, 3)
    J = (-0.1, 0.1)
    s = np.linspace(*J, 10_000)
    gap = np.abs(P(s) - c(s)).max()
    assert gap <= remainder_bound(c, P, J)


@given(seeds, st.floats(-0.8, 0.8))
def test_taylor_matches_derivatives(seed, x):
    rng = np.random.default_rng(seed)
    c = trig(rng.standard_normal((4, 2)), rng.standard_normal((4, 2)), (-1.0, 1.0))
    P = taylor_model(c, x, 3)
    for m in range(4):
        assert np.allclose(P.derivative(x, m), eval_derivative(c, x, m), rtol=1e-12, atol=1e-12)


def test_rolle_constant():
    assert rolle_constant(1) == 2
    assert rolle_constant(3) == 8 * 27


def test_rolle_trivial_cases():
    psi = polynomial_psi([2.0])
    xi = rolle_witness(psi, 3, 1.0)
    assert 0 < xi < 1
    lin = polynomial_psi([0.0, 1.0])
    xi = rolle_witness(lin, 1, 1.0)
    assert abs(lin(xi, 1)) <= 2


def test_rolle_random_polynomials(rng):
    for _ in range(100):
        coef = rng.standard_normal(rng.integers(1, 8))
        m = int(rng.integers(1, 5))
        delta = float(rng.uniform(0.2, 2.0))
        psi = polynomial_psi(coef)
        xi = rolle_witness(psi, m, delta)
        sup = np.abs(psi(np.linspace(0, delta, 20001))).max()
        assert abs(psi(xi, m)) <= rolle_constant(m) * delta ** -m * sup * (1 + 1e-9)


def test_normalizer_identity():
    c = polynomial([[0.0, 0.0], [1.0, 0.0]])
    assert np.allclose(normalizer_z(c, 0.5).mat, np.eye(4))


def test_normalizer_scaling():
    c = polynomial([[0.0], [2.0]])
    z = normalizer_z(c, 0.3)
    assert np.allclose(z.mat, make_a(-math.log(2), 2).mat)
    v = np.array([2.0])
    lhs = (z @ make_u(v) @ z.inv()).mat
    assert np.allclose(lhs, make_u(z_action(z, v)).mat)
    assert np.allclose(z_action(z, v), [1.0])


def test_normalizer_rotation():
    c = polynomial([[0.0, 0.0], [0.0, 1.0]])
    z = normalizer_z(c, 0.0)
    assert np.abs(z.mat - make_m(-math.pi / 2).mat).max() < 1e-10
    assert np.abs(z_action(z, [0.0, 1.0]) - [1.0, 0.0]).max() < 1e-10


def test_normalizer_vanishing_derivative():
    c = polynomial([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(VanishingDerivative):
        normalizer_z(c, 0.0)


@given(seeds, st.floats(0.0, 1.0))
def test_normalizer_in_centralizer(seed, s):
    rng = np.random.default_rng(seed)
    c = polynomial(rng.standard_normal((4, 2)))
    z = normalizer_z(c, s)
    a = make_a(0.8, 3)
    assert np.abs((z @ a).mat - (a @ z).mat).max() <= 1e-10 * np.abs(z.mat).max()
    assert form_residual(z) <= 1e-9
    e1 = z_action(z, eval_derivative(c, s, 1))
    assert np.abs(e1 - [1.0, 0.0]).max() <= 1e-10


def test_circle_and_line():
    th = np.linspace(0, 5, 40)
    model, res = sphere_affine_residual(np.stack([np.cos(th), np.sin(th)], 1))
    assert model == "sphere" and res <= 1e-10
    s = np.linspace(-1, 2, 30)
    model, res = sphere_affine_residual(np.stack([s, 3 * s - 1], 1))
    assert model == "affine" and res <= 1e-12


def test_cubic_avoids_obstruction():
    s = np.linspace(0, 1, 200)
    pts = np.stack([s, s ** 3], 1)
    assert sphere_affine_residual(pts)[1] > 1e-3
    assert not contained_in_obstruction(pts)


@given(seeds)
def test_sphere_fit_rigid_invariance(seed):
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, 2 * np.pi, 30)
    pts = 1.5 * np.stack([np.cos(th), np.sin(th)], 1) + 0.01 * rng.standard_normal((30, 2))
    a = rng.uniform(0, 2 * np.pi)
    R = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    moved = pts @ R.T + rng.uniform(-5, 5, 2)
    m0, r0 = sphere_affine_residual(pts)
    m1, r1 = sphere_affine_residual(moved)
    assert m0 == m1 == "sphere"
    assert abs(r0 - r1) <= 1e-9
