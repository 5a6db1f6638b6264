import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hotw.exceptions import InvalidArgumentError, UnresolvedError
from hotw.fredholm import (bounded_map, density_spectral, distribution_F, evaluate_grid,
                           fredholm_det, gauss_legendre, log_deriv, one_minus_F, truncation_point)
from oracles import airy_det, airy_kernel


def test_gauss_legendre_examples():
    r = gauss_legendre(1)
    assert r.nodes.tolist() == [0.0] and r.weights.tolist() == [2.0]
    r = gauss_legendre(2)
    assert np.allclose(r.nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-16)
    assert np.allclose(r.weights, [1, 1], atol=1e-15)
    r = gauss_legendre(16)
    assert abs(r.weights @ r.nodes ** 30 - 2 / 31) < 1e-14
    for m in (0, 2049):
        with pytest.raises(InvalidArgumentError):
            gauss_legendre(m)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 400))
def test_gauss_legendre_properties(m):
    r = gauss_legendre(m)
    assert abs(r.weights.sum() - 2) < 1e-13
    assert np.all(r.weights > 0)
    assert np.array_equal(r.nodes, -r.nodes[::-1])
    assert np.all(np.abs(r.nodes) < 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.data())
def test_gauss_legendre_exactness(m, data):
    deg = data.draw(st.integers(0, 2 * m - 1))
    r = gauss_legendre(m)
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert abs(r.weights @ r.nodes ** deg - exact) < 1e-13


def test_against_numpy_rule():
    x, w = np.polynomial.legendre.leggauss(100)
    r = gauss_legendre(100)
    assert np.abs(r.nodes - x).max() < 1e-15 and np.abs(r.weights - w).max() < 1e-14


def test_det_examples():
    assert fredholm_det(lambda u, v: 0 * u * v, (0, 1), 8) == 1
    for m in (2, 5, 30):
        assert abs(fredholm_det(lambda u, v: u * v, (0, 1), m) - 2 / 3) < 1e-12
    with pytest.raises(InvalidArgumentError):
        fredholm_det(lambda u, v: u * v, (1, 0), 4)
    with pytest.raises(InvalidArgumentError):
        fredholm_det(lambda u, v: np.where(u > 0.5, np.inf, 0.0) + 0 * v, (0, 1), 4)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=5))
def test_rank_one_identity(c):
    # K = phi (x) phi with phi a polynomial: det(I - K) = 1 - int phi^2
    phi = np.polynomial.Polynomial(c)
    exact = 1 - (phi ** 2).integ()(1) + (phi ** 2).integ()(0)
    m = len(c) + 1
    got = fredholm_det(lambda u, v: phi(u) * phi(v), (0, 1), m)
    assert abs(got - exact) < 1e-12 * max(1, abs(exact))


def test_airy_kernel_det_matches_rh_kernel(k0):
    assert abs(fredholm_det(k0, (0, 8), 60) - fredholm_det(airy_kernel, (0, 8), 60)) < 1e-9


def test_distribution_against_oracle(k0):
    r = distribution_F(k0, -3.0)
    assert abs(r.F - airy_det(-3.0)) < 1e-9
    assert r.err < 1e-12 and r.b >= 2


def test_right_tail_k1(k1):
    assert abs(distribution_F(k1, 6.0).F - 1) < 1e-10


@pytest.mark.parametrize("fixture", ["k0", "k1"])
def test_monotone(fixture, request):
    ev = request.getfixturevalue(fixture)
    F = [r.F for r in evaluate_grid(ev, np.arange(-4, 3.01, 0.5))]
    assert np.all(np.diff(F) >= -1e-10)
    assert all(-1e-9 <= f <= 1 + 1e-9 for f in F)


def test_log_deriv_examples(k0):
    assert log_deriv(k0, 4.0) <= 1e-6
    h = 1e-4
    fd = (distribution_F(k0, -1 + h).logF - distribution_F(k0, -1 - h).logF) / (2 * h)
    assert abs(fd - log_deriv(k0, -1.0)) < 1e-6


def test_log_deriv_nonnegative(k0):
    vals = [r.log_deriv for r in evaluate_grid(k0, np.arange(-6, 4.01, 0.5))]
    assert min(vals) >= -1e-9


def test_density_normalization(k0):
    # piecewise Gauss-Legendre over [-8, 5] of the resolvent density
    total = 0.0
    edges = np.arange(-8, 5.01, 1.0)
    x, w = np.polynomial.legendre.leggauss(20)
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (b - a) * (x + 1) + a
        d = np.array([r.density for r in evaluate_grid(k0, s)])
        assert d.min() >= -1e-9
        total += 0.5 * (b - a) * w @ d
    # the mass outside [-8, 5] is below 1e-20
    assert abs(total - 1) < 1e-6


@pytest.mark.parametrize("fixture", ["k0", "k1"])
def test_density_two_routes(fixture, request):
    ev = request.getfixturevalue(fixture)
    fprime = density_spectral(ev, -6, 3, n=24, panel=1.0)
    s = np.linspace(-6, 3, 19)
    d = np.array([r.density for r in evaluate_grid(ev, s)])
    assert np.abs(fprime(s) - d).max() < 1e-7


def test_invariance_under_b_and_m(k1):
    tol = 1e-12
    for s in (-3.0, 0.0, 1.5):
        r = distribution_F(k1, s, tol)
        wider = distribution_F(k1, s, tol, b=r.b + 2)
        assert abs(wider.F - r.F) <= 2 * tol
        doubled = fredholm_det(k1, (s, r.b), 2 * r.m)
        assert abs(doubled - r.F) <= 2 * tol


def test_truncation_rule(k0):
    b = truncation_point(k0, -2.0, 1e-12)
    assert b >= 2 and k0.diagonal(b)[0] < 1e-14
    assert k0.diagonal(b - 0.5)[0] >= 1e-14 or b == 2.0


def test_unresolved_carries_best(k1):
    with pytest.raises(UnresolvedError) as info:
        distribution_F(k1, -6.0, 1e-13, m_cap=40)
    assert info.value.best is not None and np.isfinite(info.value.best.F)


def test_grid_marks_unresolved(k1):
    res = evaluate_grid(k1, [-6.0, 0.0], 1e-13, m_cap=80)
    assert res[0].info["converged"] is False and np.isnan(res[0].err)
    assert res[1].info["converged"] is True


def test_one_minus_F_relative(k0):
    for s in (1.0, 3.0):
        ref = 1 - distribution_F(k0, s).F
        got = one_minus_F(k0, s)
        assert abs(got - ref) < 1e-13
    # far beyond the rounding level of F itself
    q = one_minus_F(k0, 8.0)
    assert 0 < q < 1e-15


def test_bounded_map_order():
    assert bounded_map(lambda x: x * x, range(10), workers=3) == [x * x for x in range(10)]
