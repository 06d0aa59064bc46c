import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from horoflow.curves import SmoothCurve, polynomial
from horoflow.errors import NoValidInterval, SupTooSmall, VerificationFailed
from horoflow.growth_checks import (BasicLemmaReport, _check_report, approximation_check,
                                    basic_lemma_search, poly_growth_ratio, sg_sphere_detect,
                                    square_grid)
from horoflow.lie_core import identity, make_a, make_u
from horoflow.rep_v import build_rep, so_m1_wedge

LINE = polynomial([[0.0], [1.0]])
SIN3 = SmoothCurve("trigonometric", (np.zeros((2, 2)), np.array([[0.0, 0.0], [1.0, 0.0]])),
                   (0.0, 1.0))


def unit(rep, rng):
    v = rng.standard_normal(rep.dim)
    return rep.vector(v / np.linalg.norm(v))


def test_invariant_vector():
    rep = build_rep(2)
    r = basic_lemma_search(LINE, rep.top_wedge(), 10.0, 1.0, 0.5)
    assert r.R0 == 1.0
    assert np.allclose(r.endpoint_norms, 1.0)


def test_weight_minus_one_vector():
    rep = build_rep(2)
    i = [k for k in range(rep.dim) if rep.weights[k] == -1][0]
    r = basic_lemma_search(LINE, rep.basis_vector(i), 10.0, 1.0, 0.5)
    s0, s1 = r.interval
    assert s0 <= 0.5 <= s1
    assert math.exp(10.0) * r.length ** 2 < 1.0
    assert r.R0 >= 1.0 and all(e >= 1 / r.R0 - 1e-12 for e in r.endpoint_norms)


def test_r0_stable_in_t(rng):
    rep = build_rep(2)
    vs = [unit(rep, rng) for _ in range(100)]
    sup = [max(basic_lemma_search(LINE, v, t, 1.0, 0.3).R0 for v in vs) for t in (8.0, 12.0)]
    assert max(sup) <= 2 * min(sup)


def test_exponent_two_search_n3(rng):
    c = polynomial([[0, 0], [1, 0], [0, 0.5], [0, 1 / 6]])
    rep = build_rep(3)
    r = basic_lemma_search(c, unit(rep, rng), 8.0, 1.0, 0.5, p=2)
    assert r.p == 2 and math.exp(8.0) * r.length ** 2 < 1.0


def test_bad_exponent():
    with pytest.raises(ValueError):
        basic_lemma_search(LINE, build_rep(2).top_wedge(), 1.0, 1.0, 0.5, p=3)


def test_no_valid_interval():
    with pytest.raises(NoValidInterval):
        basic_lemma_search(LINE, build_rep(2).top_wedge(), 80.0, 1.0, 0.5)


def test_report_self_check():
    bad = BasicLemmaReport((0.0, 1.0), (1.0, 1.0), (False, False), 1.0, 1.0, 5.0, 2, 0.5, 1.0)
    with pytest.raises(VerificationFailed):
        _check_report(bad, (0.0, 1.0))


def test_approximation_exact_for_low_degree(rng):
    c = polynomial([[0, 0], [1, 0], [0, 0.5]])
    gap, bound, ok = approximation_check(c, unit(build_rep(3), rng), 10.0, 0.5, 0.1)
    assert gap == 0.0 and ok


def test_approximation_sin(rng):
    v = unit(build_rep(3), rng)
    gap, bound, ok = approximation_check(SIN3, v, 12.0, 0.5, 0.1)
    assert ok


def test_approximation_oversized_interval(rng):
    # e^t |J|^3 = 10^3: the check is allowed to fail; it must still report
    t = 12.0
    L = (1e3 * math.exp(-t)) ** (1 / 3)
    v = unit(build_rep(3), rng)
    gap, bound, ok = approximation_check(SIN3, v, t, 0.5, 0.1, interval=(0.5 - L / 2, 0.5 + L / 2))
    assert gap >= 0 and bound > 0 and isinstance(ok, bool)


def test_linear_ratio():
    small, large = poly_growth_ratio([[0.0], [1.0]], (0.0, 1.0), 0.3, 1.0)
    assert small / large == pytest.approx(0.3, abs=1e-4)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 6])
@pytest.mark.parametrize("q", [0.1, 0.01])
def test_monomial_ratio(d, q):
    coef = np.zeros((d + 1, 1))
    coef[d] = 1.0
    small, large = poly_growth_ratio(coef, (0.0, 1.0), q, 1.0)
    assert small / large == pytest.approx(q ** (1 / d), abs=2e-4)


def test_sup_too_small():
    with pytest.raises(SupTooSmall):
        poly_growth_ratio([[0.1], [0.1]], (0.0, 1.0), 0.1, 1.0)


def test_random_envelope(rng):
    for _ in range(100):
        deg = int(rng.integers(1, 5))
        coef = rng.standard_normal((deg + 1, 3))
        s = np.concatenate([[0.0, 1.0], (np.arange(10_000) + 0.5) / 10_000])
        R = np.linalg.norm(np.polynomial.polynomial.polyval(s, coef).T, axis=1).max()
        for q in (0.1, 0.01):
            small, large = poly_growth_ratio(coef, (0.0, 1.0), q * R, R)
            assert small / large <= 3 * q ** 0.25


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_sublevel_monotone(seed):
    coef = np.random.default_rng(seed).standard_normal((4, 2))
    R = 0.9 * np.linalg.norm(np.polynomial.polynomial.polyval(np.linspace(0, 1, 401), coef).T,
                             axis=1).max()
    rs = np.linspace(0.05, 0.95, 8) * R
    smalls = [poly_growth_ratio(coef, (0, 1), r, R)[0] for r in rs]
    assert np.all(np.diff(smalls) >= 0)
    large = poly_growth_ratio(coef, (0, 1), 0.5 * R, R)[1]
    assert poly_growth_ratio(coef, (0, 1), R * (1 - 1e-15), R)[0] <= large


def test_sg_detect_identity():
    rep = build_rep(3)
    p0 = so_m1_wedge(rep, 2)
    pts, fit, res = sg_sphere_detect(identity(3), p0, square_grid(3, 1.0, 0.1))
    assert len(pts) > 0 and fit in ("sphere", "affine") and res <= 1e-6
    pts2, fit2, _ = sg_sphere_detect(make_a(1.5, 3), p0, square_grid(3, 1.0, 0.1))
    assert fit2 == fit


def test_sg_translation_equivariance():
    rep = build_rep(3)
    p0 = so_m1_wedge(rep, 2)
    grid = square_grid(3, 1.0, 0.1)
    x0 = np.array([0.0, 0.3])
    base = sg_sphere_detect(identity(3), p0, grid)[0]
    moved = sg_sphere_detect(make_u(x0), p0, grid)[0]
    want = {tuple(np.round(p - x0, 9)) for p in base}
    got = {tuple(np.round(p, 9)) for p in moved}
    inside = {p for p in want if max(abs(c) for c in p) <= 1.0 + 1e-9}
    assert inside <= got


def test_sg_residual_refinement():
    rep = build_rep(3)
    p0 = so_m1_wedge(rep, 2)
    r1 = sg_sphere_detect(identity(3), p0, square_grid(3, 1.0, 0.1))[2]
    r2 = sg_sphere_detect(identity(3), p0, square_grid(3, 1.0, 0.05))[2]
    assert abs(r1 - r2) <= 0.1 * max(r1, r2) + 1e-12


def test_sg_empty():
    rep = build_rep(3)
    v = rep.vector(np.where(rep.weights > 0, 1.0, 0.0))
    pts, fit, _ = sg_sphere_detect(identity(3), v, square_grid(3, 0.5, 0.25))
    assert fit == "empty" and len(pts) == 0
