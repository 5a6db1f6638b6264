"""Chebyshev collocation solver for RH problems in canonical form.

With Psi = I + C U and C^+ - C^- = U on the contour, the jump relation
Psi_+ = Psi_- G becomes

    U + (C^- U)(I - G) = G - I,

which is collocated at the Chebyshev points of each component (endpoints
included, using the regularized junction limits from :mod:`hotw.cauchy`).
The equation acts on each row of U separately, so one 2N x 2N matrix serves
both rows of Psi as two right-hand sides.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cauchy import MINUS, PLUS, OFF, component_basis, cauchy_matrix_minus, zero_sum_rows
from .cauchy import TWO_PI_I, collocation_layout
from .chebyshev import ChebSeries, cheb_points, tail_estimate, clenshaw
from .exceptions import InvalidArgumentError, NoSolutionError, UnresolvedError

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
MAX_DEGREE = 512


@dataclass(frozen=True)
class SpectralSolution:
    """Chebyshev coefficient blocks of U on each component.

    ``blocks[i]`` has shape (n_i, 2, 2): coefficient j of T_j(M_i(zeta)).
    """

    problem: object
    blocks: tuple
    tail: float
    repaired_rows: int = 0
    info: dict = field(default_factory=dict, compare=False)

    @property
    def degrees(self):
        return [b.shape[0] for b in self.blocks]

    def series(self, i):
        return ChebSeries(self.blocks[i])

    def density(self, i, zeta):
        """U on component i at points zeta of that component."""
        comp = self.problem.components[i]
        x = comp.chart(np.asarray(zeta, dtype=complex)).real
        return clenshaw(self.blocks[i], x)

    def zero_sum_residual(self):
        rows, _ = zero_sum_rows(self.problem, self.degrees)
        u = np.concatenate([b.reshape(b.shape[0], 4) for b in self.blocks])
        if rows.size == 0:
            return 0.0
        return float(np.abs(rows @ u).max())


def _assemble(problem, degrees):
    C, E = cauchy_matrix_minus(problem, degrees)
    N = C.shape[0]
    offs = collocation_layout(problem, degrees)
    G = np.empty((N, 2, 2), dtype=complex)
    for i, comp in enumerate(problem.components):
        x = cheb_points(degrees[i])
        G[offs[i]:offs[i + 1]] = problem.jump_at(i, comp.inverse_chart(x))
    IG = np.eye(2) - G
    L = np.empty((2 * N, 2 * N), dtype=complex)
    for c in range(2):
        for b in range(2):
            blk = IG[:, b, c][:, None] * C
            if b == c:
                blk = blk + E
            L[c * N:(c + 1) * N, b * N:(b + 1) * N] = blk
    # right-hand sides: row r of (G - I), stacked by column c
    R = np.empty((2 * N, 2), dtype=complex)
    for r in range(2):
        for c in range(2):
            R[c * N:(c + 1) * N, r] = -IG[:, r, c]
    return L, R, N


def _zero_sum_system(problem, degrees, N):
    Z, labels = zero_sum_rows(problem, degrees)
    nz = Z.shape[0]
    # one constraint per junction for each of the two columns of U
    Zfull = np.zeros((2 * nz, 2 * N))
    Zfull[:nz, :N] = Z
    Zfull[nz:, N:] = Z
    return Zfull, labels


def _junction_row_indices(problem, degrees, N):
    offs = collocation_layout(problem, degrees)
    idx = []
    for i in range(len(problem.components)):
        idx += [offs[i], offs[i + 1] - 1]
    idx = np.array(idx)
    return np.concatenate([idx, idx + N])


def _dependent_rows(L, candidates, count):
    """Pick ``count`` rows among ``candidates`` that a pivoted QR ranks last."""
    # pivoting sequence of QR on L^H orders rows from most to least independent
    _, _, piv = sla.qr(L.conj().T, mode="economic", pivoting=True)
    cand = set(int(c) for c in candidates)
    chosen = [int(r) for r in piv[::-1] if int(r) in cand][:count]
    return chosen


def solve_rh(problem, degrees):
    """Solve the collocation system at the given per-component degrees."""
    if np.isscalar(degrees):
        degrees = [int(degrees)] * len(problem.components)
    degrees = [int(n) for n in degrees]
    if len(degrees) != len(problem.components):
        raise InvalidArgumentError("one degree per component is required")
    if min(degrees) < 4:
        raise InvalidArgumentError("degrees must be >= 4")
    L, R, N = _assemble(problem, degrees)
    if not np.all(np.isfinite(L)) or not np.all(np.isfinite(R)):
        raise InvalidArgumentError("jump is not finite at some collocation point")
    Z, _ = _zero_sum_system(problem, degrees, N)
    repaired = 0
    try:
        lu = sla.lu_factor(L, check_finite=False)
        X = sla.lu_solve(lu, R, check_finite=False)
        ok = np.all(np.isfinite(X))
    except (sla.LinAlgError, ValueError):
        ok = False
    if ok:
        resid = np.abs(L @ X - R).max() / max(1.0, np.abs(R).max())
        zs = np.abs(Z @ X).max() if Z.size else 0.0
        ok = resid < 1e-8 and zs < RANK_TOL * max(1.0, np.abs(X).max())
    if not ok:
        X, repaired = _repair_and_solve(L, R, Z, problem, degrees, N)
    blocks = _unpack(X, degrees, N)
    sol = SpectralSolution(problem, tuple(blocks), 0.0, repaired,
                           {"N": N, "system_size": 2 * N})
    tail = max(tail_estimate(ChebSeries(b)) for b in blocks)
    return SpectralSolution(problem, sol.blocks, tail, repaired, sol.info)


def _repair_and_solve(L, R, Z, problem, degrees, N):
    s = np.linalg.svd(L, compute_uv=False)
    deficiency = int(np.sum(s < RANK_TOL * s[0]))
    log.debug("collocation system rank deficiency %d", deficiency)
    if deficiency == 0:
        # well conditioned but violates the zero-sum rows: append them (least squares)
        A = np.vstack([L, Z])
        B = np.vstack([R, np.zeros((Z.shape[0], 2))])
        X = np.linalg.lstsq(A, B, rcond=None)[0]
        return X, 0
    cand = _junction_row_indices(problem, degrees, N)
    rows = _dependent_rows(L, cand, deficiency)
    # use the zero-sum constraints that best restore rank
    L2 = L.copy()
    R2 = R.copy()
    used = []
    for r in rows:
        best, best_s = None, -1.0
        for q in range(Z.shape[0]):
            if q in used:
                continue
            L2[r] = Z[q]
            smin = np.linalg.svd(L2, compute_uv=False)[-1]
            if smin > best_s:
                best, best_s = q, smin
        if best is None:
            # more deficient directions than zero-sum constraints
            break
        L2[r] = Z[best]
        R2[r] = 0.0
        used.append(best)
    s2 = np.linalg.svd(L2, compute_uv=False)
    if s2[-1] < RANK_TOL * s2[0]:
        raise NoSolutionError("collocation system is singular after zero-sum repair; "
                              "the RH problem is likely unsolvable for these parameters")
    X = np.linalg.solve(L2, R2)
    return X, len(used)


def _unpack(X, degrees, N):
    offs = collocation_layout(None, degrees)
    blocks = []
    for i, n in enumerate(degrees):
        sl = slice(offs[i], offs[i + 1])
        U = np.empty((n, 2, 2), dtype=complex)
        for r in range(2):
            for b in range(2):
                U[:, r, b] = X[b * N + sl.start: b * N + sl.stop, r]
        blocks.append(U)
    return blocks


def cauchy_of_solution(sol, zeta, side=OFF, on_component=None):
    """(C U)(zeta) for points zeta; ``side`` applies to points on ``on_component``."""
    zeta = np.asarray(zeta, dtype=complex)
    out = np.zeros(zeta.shape + (2, 2), dtype=complex)
    for i, comp in enumerate(sol.problem.components):
        U = sol.blocks[i]
        sd = side if on_component == i else OFF
        B = component_basis(comp, zeta, U.shape[0], sd) / TWO_PI_I
        out += np.tensordot(B, U, axes=([-1], [0]))
    return out


def evaluate_psi(sol, zeta, side=OFF, component=None):
    """Psi = I + C U at zeta (2x2 per point).

    Points on the contour need ``component`` (index of the component they lie
    on) and ``side``.  Off-contour points use ``side=OFF``.
    """
    zeta = np.asarray(zeta, dtype=complex)
    if side is not OFF and component is None:
        raise InvalidArgumentError("on-contour evaluation needs the component index")
    return np.eye(2) + cauchy_of_solution(sol, zeta, side, component)


def evaluate_psi_deriv(sol, zeta, side=OFF, component=None):
    """d Psi / d zeta; on-contour points give the derivative of the chosen boundary value."""
    zeta = np.asarray(zeta, dtype=complex)
    if side is not OFF and component is None:
        raise InvalidArgumentError("on-contour evaluation needs the component index")
    out = np.zeros(zeta.shape + (2, 2), dtype=complex)
    for i, comp in enumerate(sol.problem.components):
        U = sol.blocks[i]
        sd = side if component == i else OFF
        _, D = component_basis(comp, zeta, U.shape[0], sd, deriv=True)
        out += np.tensordot(D / TWO_PI_I, U, axes=([-1], [0]))
    return out


def jump_residual(sol, samples=20, seed=0):
    """max |Psi_+ - Psi_- G| over random interior points of every component."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    comps = sol.problem.components
    for _ in range(samples):
        i = int(rng.integers(len(comps)))
        x = rng.uniform(-0.98, 0.98)
        z = comps[i].inverse_chart(np.array([x]))
        Pp = evaluate_psi(sol, z, PLUS, i)[0]
        Pm = evaluate_psi(sol, z, MINUS, i)[0]
        G = sol.problem.jump_at(i, z)[0]
        worst = max(worst, float(np.abs(Pp - Pm @ G).max()))
    return worst


def equation_residual(sol, samples=7):
    """Residual of C^+U - C^-U G - (G - I) at off-collocation interior points."""
    worst = 0.0
    x = np.cos(np.pi * (np.arange(samples) + 0.5) / samples) * 0.97
    for i, comp in enumerate(sol.problem.components):
        z = comp.inverse_chart(x)
        Cp = cauchy_of_solution(sol, z, PLUS, i)
        Cm = cauchy_of_solution(sol, z, MINUS, i)
        G = sol.problem.jump_at(i, z)
        r = Cp - Cm @ G - (G - np.eye(2))
        worst = max(worst, float(np.abs(r).max()))
    return worst


def dump_system(problem, degrees, path):
    """Write L_n, the right-hand sides and the solved coefficients to a binary cache file."""
    from .cache import dumps
    if np.isscalar(degrees):
        degrees = [int(degrees)] * len(problem.components)
    L, R, N = _assemble(problem, degrees)
    sol = solve_rh(problem, degrees)
    arrays = {"L": L, "R": R}
    arrays.update({f"U{i}": b for i, b in enumerate(sol.blocks)})
    meta = {"problem": problem.name, "degrees": list(map(int, degrees)), "tail": sol.tail}
    with open(path, "wb") as fh:
        fh.write(dumps(meta, arrays))
    return sol


def adaptive_solve(problem, tol=1e-12, start=8, cap=MAX_DEGREE, relative=False):
    """Double every degree from ``start`` until the coefficient tail is below tol.

    With ``relative`` the tail is measured against the largest coefficient,
    which matters when the jumps (and hence U) are large.
    """
    if tol < 1e-13:
        raise InvalidArgumentError("tol must be >= 1e-13")
    n = int(start)
    best, best_err = None, np.inf
    history = []
    while n <= cap:
        sol = solve_rh(problem, n)
        scale = max(float(np.abs(b).max()) for b in sol.blocks) if relative else 1.0
        err = sol.tail / max(scale, 1e-300) if relative else sol.tail
        history.append((n, sol.tail))
        log.debug("adaptive_solve n=%d tail=%.3e", n, sol.tail)
        if err < best_err:
            best, best_err = sol, err
        if err < tol:
            sol.info["history"] = history
            return sol
        n *= 2
    best.info["history"] = history
    raise UnresolvedError(f"coefficient tail {best_err:.2e} above tol {tol:.1e} at degree cap {cap}",
                          best=best, estimate=best_err)


__all__ = ["SpectralSolution", "solve_rh", "adaptive_solve", "evaluate_psi",
           "evaluate_psi_deriv", "jump_residual", "equation_residual", "cauchy_of_solution", "dump_system"]
