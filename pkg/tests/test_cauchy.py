import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hotw.cauchy import (MINUS, PLUS, cauchy_T, cauchy_component, cauchy_component_deriv,
                         cauchy_matrix_minus, component_basis, joukowski_inverse, stieltjes_T,
                         zero_sum_rows)
from hotw.chebyshev import ChebSeries, cheb_T
from hotw.contour import CanonicalRHProblem, ContourComponent
from hotw.exceptions import EndpointSingularError, InvalidArgumentError
from oracles import cauchy_arc_quad, cauchy_interval_quad

TWO_PI_I = 2j * np.pi


def test_plemelj_examples():
    assert abs(cauchy_T(0, 0.0, PLUS) - cauchy_T(0, 0.0, MINUS) - 1) < 1e-14
    d = cauchy_T(3, 0.4, PLUS) - cauchy_T(3, 0.4, MINUS)
    assert abs(d - (-0.944)) < 1e-13


def test_far_value_log_and_quadrature():
    v = cauchy_T(0, 10.0)
    assert abs(v - np.log(9 / 11) / TWO_PI_I) < 1e-15
    assert abs(v - cauchy_interval_quad(lambda t: 1.0 + 0 * t, 10.0 + 0j)) < 1e-12


@pytest.mark.parametrize("z", [0.3 + 0.2j, -0.9 + 0.05j, 1.4 - 0.3j, 3 + 4j, -2.5 + 1e-3j, 0.999 + 1e-4j])
def test_closed_form_against_quadrature(z):
    c = stieltjes_T(13, np.array([z]))[0] / TWO_PI_I
    for j in (0, 1, 2, 5, 12):
        ref = cauchy_interval_quad(lambda t: np.cos(j * np.arccos(t)), z)
        assert abs(c[j] - ref) < 1e-11, j


def test_both_routes_agree_at_switch():
    # points just inside and outside the recurrence region give the same values
    z = np.array([1.2 + 0.05j, 1.2 + 0.5j, -1.1 + 0.2j])
    for n in (8, 40):
        a = stieltjes_T(n, z)
        b = np.array([stieltjes_T(n + 64, np.array([zz]))[0, :n] for zz in z])
        assert np.abs(a - b).max() < 1e-12


@settings(max_examples=60)
@given(st.integers(0, 12), st.floats(-0.99, 0.99))
def test_plemelj_property(j, x):
    d = cauchy_T(j, x, PLUS) - cauchy_T(j, x, MINUS)
    assert abs(d - np.cos(j * np.arccos(x))) < 1e-12


@settings(max_examples=30)
@given(st.floats(-0.98, 0.98), st.integers(0, 12))
def test_boundary_value_is_limit(x, j):
    # closed forms stay accurate right up to the interval
    for side, sgn in ((PLUS, 1), (MINUS, -1)):
        near = stieltjes_T(j + 1, np.array([x + sgn * 1e-9j]))[0, j]
        on = stieltjes_T(j + 1, np.array([x + 0j]), side)[0, j]
        assert abs(near - on) < 1e-6


def test_branch_cut_only_on_interval():
    phi = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    z = 2 * np.exp(1j * phi)
    c = stieltjes_T(6, z)
    jumps = np.abs(np.diff(c, axis=0)).max()
    assert jumps < 0.1
    # T_0 imaginary parts differ by exactly 2 pi across (-1, 1)
    x = np.linspace(-0.9, 0.9, 7) + 0j
    cp = stieltjes_T(1, x, PLUS)[:, 0]
    cm = stieltjes_T(1, x, MINUS)[:, 0]
    assert np.allclose((cp - cm).imag, 2 * np.pi, atol=1e-14)
    assert np.allclose((cp - cm).real, 0, atol=1e-14)


def test_side_errors():
    with pytest.raises(InvalidArgumentError):
        cauchy_T(0, 2.0, PLUS)
    with pytest.raises(InvalidArgumentError):
        cauchy_T(0, 0.5)
    with pytest.raises(EndpointSingularError):
        cauchy_T(2, 1.0)


def test_decay():
    r = np.logspace(1, 6, 12)
    for j in range(6):
        c = np.abs(stieltjes_T(j + 1, r * np.exp(0.7j))[:, j])
        assert np.all(c * r <= 4.0)


def test_cauchy_riemann():
    z0 = 0.4 + 0.7j
    h = 1e-6
    f = lambda z: stieltjes_T(8, np.array([z]))[0]
    dx = (f(z0 + h) - f(z0 - h)) / (2 * h)
    dy = (f(z0 + 1j * h) - f(z0 - 1j * h)) / (2j * h)
    assert np.abs(dx - dy).max() < 1e-7


def test_joukowski_inside_unit_disk():
    z = np.array([2.0, -3.0 + 0j, 0.2 + 1e-3j, -5 - 1e-16j, 1j])
    assert np.all(np.abs(joukowski_inverse(z)) < 1)


def _interval():
    return ContourComponent.segment(-1.0, 1.0, degree=7, name="I")


def test_component_examples():
    comp = _interval()
    zero = ChebSeries(np.zeros((5, 2, 2)))
    assert np.all(cauchy_component(comp, zero, np.array([0.3 + 1j])) == 0)
    U = np.zeros((5, 2, 2))
    U[0] = np.eye(2)
    val = cauchy_component(comp, ChebSeries(U), np.array([10.0 + 0j]))[0]
    assert np.allclose(val, np.eye(2) * cauchy_T(0, 10.0), atol=1e-15)


def test_arc_component_against_quadrature():
    comp = ContourComponent.arc(0.0, 1.0, np.pi / 2, 0.0, degree=8, name="quarter")
    U = np.zeros((3, 2, 2))
    U[1] = np.eye(2)
    val = cauchy_component(comp, ChebSeries(U), np.array([0j]))[0, 0, 0]
    M = comp.chart
    # image of infinity correction keeps the transform decaying; the oracle integrates T_1(M(t))
    ref = cauchy_arc_quad(lambda t: M(t), 0.0, 1.0, np.pi / 2, 0.0, 0j)
    assert abs(val - ref) < 1e-10


def test_component_derivative():
    comp = _interval()
    U = np.zeros((4, 2, 2))
    U[0] = np.eye(2)
    d = cauchy_component_deriv(comp, ChebSeries(U), np.array([5.0 + 0j]))[0, 0, 0]
    assert abs(d - (1 / 4 - 1 / 6) / TWO_PI_I) < 1e-14
    assert np.all(cauchy_component_deriv(comp, ChebSeries(np.zeros((4, 2, 2))), np.array([2j])) == 0)
    rng = np.random.default_rng(3)
    for c in (_interval(), ContourComponent.arc(0, 1.0, 2.0, 0.5, degree=6)):
        U = rng.standard_normal((6, 2, 2)) + 1j * rng.standard_normal((6, 2, 2))
        s = ChebSeries(U)
        z = np.array([3.0 + 0.1j])
        h = 1e-5
        fd = (cauchy_component(c, s, z + h) - cauchy_component(c, s, z - h)) / (2 * h)
        assert np.abs(cauchy_component_deriv(c, s, z) - fd).max() < 1e-8
    with pytest.raises(InvalidArgumentError):
        cauchy_component_deriv(_interval(), s, np.array([0.2 + 0j]))


def _two_rays():
    comps = [ContourComponent.segment(-2.0, 0.0, degree=6, end_label="o", name="left"),
             ContourComponent.segment(0.0, 3.0, degree=7, start_label="o", name="right")]
    return CanonicalRHProblem(comps, lambda i, z: np.broadcast_to(np.eye(2), z.shape + (2, 2)),
                              {"o": 0j})


def test_matrix_single_component_row():
    prob = CanonicalRHProblem([_interval()], lambda i, z: np.broadcast_to(np.eye(2), z.shape + (2, 2)))
    C, E = cauchy_matrix_minus(prob, [7])
    # row 3 is the collocation point x = 0; column 0 is T_0
    assert abs(C[3, 0] - cauchy_T(0, 0.0, MINUS)) < 1e-15
    assert np.allclose(E, cheb_T(7, np.cos(np.pi * np.arange(6, -1, -1) / 6)), atol=1e-14)


def test_matrix_interior_row_against_limit():
    prob = _two_rays()
    C, _ = cauchy_matrix_minus(prob, [6, 7])
    rng = np.random.default_rng(0)
    u = rng.standard_normal(13)
    comp = prob.components[1]
    x = comp.points(7)[2]
    # approach from the minus (right-hand) side of the rightward segment: below
    vals = []
    for eps in (1e-4, 5e-5, 2.5e-5):
        z = np.array([x - 1j * eps])
        v = sum(component_basis(c, z, n)[0] @ u[o:o + n]
                for c, n, o in zip(prob.components, (6, 7), (0, 6))) / TWO_PI_I
        vals.append(v)
    # Richardson: linear error in eps
    r1 = 2 * vals[1] - vals[0]
    r2 = 2 * vals[2] - vals[1]
    ref = (4 * r2 - r1) / 3
    assert abs(C[6 + 2] @ u - ref) < 1e-8


def test_junction_rows_finite_under_zero_sum():
    prob = _two_rays()
    C, _ = cauchy_matrix_minus(prob, [6, 7])
    assert np.all(np.isfinite(C))
    Z, labels = zero_sum_rows(prob, [6, 7])
    assert len(labels) == 3
