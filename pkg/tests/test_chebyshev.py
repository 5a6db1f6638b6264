import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hotw.chebyshev import (ChebSeries, cheb_points, cheb_T, coeffs_to_vals, diff_coeffs,
                            eval_series, integral_weights, tail_estimate, vals_to_coeffs)
from hotw.exceptions import InvalidArgumentError


def test_grid_small_cases():
    assert np.array_equal(cheb_points(2), [-1.0, 1.0])
    assert np.array_equal(cheb_points(3), [-1.0, 0.0, 1.0])
    h = np.sqrt(2) / 2
    assert np.allclose(cheb_points(5), [-1, -h, 0, h, 1], atol=1e-15)


def test_grid_rejects_small_n():
    with pytest.raises(InvalidArgumentError):
        cheb_points(1)


@given(st.integers(2, 300))
def test_grid_symmetric_sorted(n):
    x = cheb_points(n)
    assert np.array_equal(x, -x[::-1])
    assert np.all(np.diff(x) > 0)


def test_constant_and_basis_reproduction():
    c = vals_to_coeffs(np.full(9, 2.5)).coeffs
    assert np.allclose(c, [2.5] + [0] * 8, atol=1e-14)
    x = cheb_points(9)
    c = vals_to_coeffs(2 * x ** 2 - 1).coeffs
    e = np.zeros(9)
    e[2] = 1
    assert np.allclose(c, e, atol=1e-14)


@settings(max_examples=50)
@given(st.integers(2, 80), st.integers(0, 2 ** 31 - 1))
def test_roundtrip(n, seed):
    v = np.random.default_rng(seed).standard_normal((n, 2, 2))
    back = coeffs_to_vals(vals_to_coeffs(v))
    assert np.allclose(back, v, rtol=0, atol=1e-13 * max(1, np.abs(v).max()))


@settings(max_examples=30)
@given(st.integers(2, 40), st.integers(0, 2 ** 31 - 1))
def test_exact_on_polynomials(n, seed):
    c = np.random.default_rng(seed).standard_normal(n)
    x = cheb_points(n)
    vals = cheb_T(n, x) @ c
    assert np.allclose(vals_to_coeffs(vals).coeffs, c, atol=1e-13)


def test_eval_examples():
    assert eval_series(ChebSeries(np.array([0.0, 1.0])), 0.3) == pytest.approx(0.3, abs=1e-15)
    assert eval_series(ChebSeries(np.array([1.0, 0.0, 1.0])), 1.0) == pytest.approx(2.0, abs=1e-15)
    s = vals_to_coeffs(np.exp(cheb_points(21)))
    assert abs(eval_series(s, 0.5) - np.exp(0.5)) < 1e-12


@settings(max_examples=40)
@given(st.integers(1, 60), st.floats(-1, 1))
def test_clenshaw_matches_direct_sum(n, x):
    c = np.random.default_rng(n).standard_normal(n)
    assert abs(eval_series(ChebSeries(c), x) - cheb_T(n, x) @ c) < 1e-13 * n


def test_eval_outside_interval():
    with pytest.raises(InvalidArgumentError):
        eval_series(ChebSeries(np.ones(3)), 1.5)


def test_tail_estimate_examples():
    c = 10.0 ** (-3.0 * np.arange(11))
    assert tail_estimate(ChebSeries(c)) == pytest.approx(1e-27)
    assert tail_estimate(ChebSeries(np.zeros(8))) == 0.0
    x = cheb_points(32)
    assert tail_estimate(vals_to_coeffs(np.abs(x))) > 1e-6
    with pytest.raises(InvalidArgumentError):
        tail_estimate(ChebSeries(np.ones(3)))


@pytest.mark.parametrize("f", [np.exp, lambda x: 1 / (x - 2)])
def test_tail_decays_geometrically(f):
    tails = [tail_estimate(vals_to_coeffs(f(cheb_points(n)))) for n in (8, 16, 32)]
    assert tails[1] < 1e-3 * tails[0] or tails[1] < 1e-14
    assert tails[2] < 1e-14


def test_derivative_and_weights():
    x = cheb_points(30)
    d = ChebSeries(diff_coeffs(vals_to_coeffs(np.sin(3 * x)).coeffs))
    t = np.linspace(-1, 1, 7)
    assert np.allclose(eval_series(d, t), 3 * np.cos(3 * t), atol=1e-11)
    w = integral_weights(30)
    assert abs(w @ np.exp(x) - (np.e - 1 / np.e)) < 1e-14
