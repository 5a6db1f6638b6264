import numpy as np
import pytest

from hotw.cache import loads
from hotw.contour import CanonicalRHProblem, ContourComponent
from hotw.exceptions import ContourTopologyError, InvalidArgumentError, UnresolvedError
from hotw.painleve import ModelParams, build_psi_problem
from hotw.rhsolver import (_assemble, _repair_and_solve, _zero_sum_system, _junction_row_indices,
                           adaptive_solve, dump_system, equation_residual, evaluate_psi,
                           jump_residual, solve_rh)
from oracles import cauchy_interval_quad


def identity_jump(i, z):
    return np.broadcast_to(np.eye(2, dtype=complex), z.shape + (2, 2)).copy()


def upper_jump(g):
    def jump(i, z):
        G = identity_jump(i, z)
        G[..., 0, 1] = g(z.real)
        return G
    return jump


def interval_problem(jump, degree=16):
    comp = ContourComponent.segment(-1.0, 1.0, degree=degree, name="I")
    return CanonicalRHProblem([comp], jump)


def test_identity_jump():
    prob = CanonicalRHProblem([ContourComponent.segment(0, 2.0, start_label="a", name="s"),
                               ContourComponent.arc(1.0, 1.0, np.pi, 0.5, start_label="a", name="c")],
                              identity_jump, {"a": 0j})
    sol = adaptive_solve(prob, 1e-12)
    assert sol.info["history"][0][0] == 8 and sol.tail == 0.0
    assert all(np.all(b == 0) for b in sol.blocks)
    assert np.allclose(evaluate_psi(sol, np.array([0.3 + 2j, -4.0])), np.eye(2))


def test_upper_triangular_jump_explicit_solution():
    g = lambda x: (1 - x ** 2) * np.exp(x)
    sol = adaptive_solve(interval_problem(upper_jump(g)), 1e-13)
    for z in (0.2 + 0.5j, 2.0 + 0j, -0.7 - 0.3j):
        P = evaluate_psi(sol, np.array([z]))[0]
        ref = cauchy_interval_quad(g, z)
        assert abs(P[0, 1] - ref) < 1e-10
        assert abs(P[0, 0] - 1) < 1e-12 and abs(P[1, 0]) < 1e-12 and abs(P[1, 1] - 1) < 1e-12


def test_discontinuous_jump_unresolved():
    g = lambda x: (1 - x ** 2) * np.where(x > 0.1, 1.0, 0.0)
    with pytest.raises(UnresolvedError) as info:
        adaptive_solve(interval_problem(upper_jump(g)), 1e-12, cap=128)
    assert info.value.best is not None and info.value.estimate > 1e-12


def test_degree_validation():
    prob = interval_problem(identity_jump)
    with pytest.raises(InvalidArgumentError):
        solve_rh(prob, 3)
    with pytest.raises(InvalidArgumentError):
        adaptive_solve(prob, 1e-14)


def test_topology_checked():
    with pytest.raises(ContourTopologyError):
        CanonicalRHProblem([ContourComponent.segment(0, 1.0, end_label="x")], identity_jump,
                           {"x": 2.0 + 0j})


@pytest.fixture(scope="module")
def psi2():
    prob = build_psi_problem(ModelParams(1))
    return adaptive_solve(prob, 1e-12, relative=True)


def test_psi2_degrees_and_residuals(psi2):
    assert max(psi2.degrees) <= 128
    assert jump_residual(psi2) <= 1e-8
    assert psi2.zero_sum_residual() <= 1e-10
    assert equation_residual(psi2) <= max(10 * psi2.tail, 1e-11)
    far = evaluate_psi(psi2, np.array([1e6 + 0j]))[0]
    assert np.abs(far - np.eye(2)).max() < 1e-5


def test_geometric_convergence():
    prob = build_psi_problem(ModelParams(0))
    tails = [solve_rh(prob, n).tail for n in (8, 16, 32, 64)]
    assert tails[1] < 0.1 * tails[0] and tails[2] < 0.1 * tails[1]
    logs = np.log(np.maximum(tails, 1e-17))
    assert np.all(np.diff(logs) < 0)


def test_rank_repair_restores_zero_sum():
    # duplicate a junction row to make the system rank deficient
    prob = build_psi_problem(ModelParams(0))
    deg = [16] * 6
    L, R, N = _assemble(prob, deg)
    Z, _ = _zero_sum_system(prob, deg, N)
    L = L.copy()
    idx = _junction_row_indices(prob, deg, N)
    L[idx[0]] = L[idx[3]]
    X, repaired = _repair_and_solve(L, R, Z, prob, deg, N)
    assert repaired >= 1
    assert np.abs(Z @ X).max() < 1e-8


def test_debug_dump(tmp_path):
    prob = interval_problem(upper_jump(lambda x: 1 - x ** 2), 8)
    path = tmp_path / "sys.bin"
    sol = dump_system(prob, 8, path)
    meta, arrays = loads(path.read_bytes())
    assert meta["degrees"] == [8]
    assert arrays["L"].shape == (16, 16) and arrays["L"].dtype == np.complex128
    assert np.array_equal(arrays["U0"], sol.blocks[0])
