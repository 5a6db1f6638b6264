"""The Psi^(2k) RH problem, recovery of Phi and the higher-order kernels.

Phi has jumps S_1 on (0, inf), S_2 and S_4 on the rays at angles
+-(pi - pi/(4k+3)) (oriented towards 0) and S_3 on (-inf, 0).  Outside the
unit circle we factor out W = zeta^{-sigma3/4} N e^{-theta sigma3}; inside,
constant triangular factors.  Psi then has jumps only on three truncated rays
and three arcs of the unit circle, all decaying or bounded.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cache import load_solution, solution_key, store_solution
from .cauchy import OFF, PLUS
from .contour import CanonicalRHProblem, ContourComponent
from .exceptions import ConsistencyError, InvalidArgumentError, UnresolvedError
from .kernels import IntegrableKernel
from .rhsolver import adaptive_solve, evaluate_psi, evaluate_psi_deriv

log = logging.getLogger(__name__)

S1 = np.array([[1, 1], [0, 1]], dtype=complex)
S2 = np.array([[1, 0], [1, 1]], dtype=complex)
S3 = np.array([[0, 1], [-1, 0]], dtype=complex)
S4 = S2.copy()
S4_INV = np.linalg.inv(S4)
SIGMA3 = np.diag([1.0, -1.0]).astype(complex)
N_MATRIX = (np.array([[1, 1], [-1, 1]]) / np.sqrt(2)) @ np.diag(np.exp([-0.25j * np.pi, 0.25j * np.pi]))

# region prefactors inside the unit circle
PRE_41 = S4_INV
PRE_12 = S4_INV @ S1
PRE_23 = S4_INV @ S1 @ np.linalg.inv(S2)
PRE_34 = np.eye(2, dtype=complex)

DECAY_LEVEL = 1e-16
BRANCHES = ("principal", "above", "below")


@dataclass(frozen=True)
class ModelParams:
    """Order k and the 2k real parameters t_0..t_{2k-1}."""

    k: int = 0
    t: Sequence[float] = ()
    R: Optional[float] = None
    tol: float = 1e-12

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise InvalidArgumentError("k must be a nonnegative integer")
        t = tuple(float(x) for x in self.t)
        if len(t) == 0 and self.k > 0:
            t = (0.0,) * (2 * self.k)
        if len(t) != 2 * self.k:
            raise InvalidArgumentError(f"t must have length 2k = {2 * self.k}, got {len(t)}")
        if not np.all(np.isfinite(t)):
            raise InvalidArgumentError("t must be finite")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "t", t)
        if self.R is None:
            object.__setattr__(self, "R", truncation_radius(self))
        elif self.R <= 1:
            raise InvalidArgumentError("truncation radius must exceed 1")

    @property
    def order(self):
        return 4 * self.k + 3

    @property
    def ray_angle(self):
        """Angle of the upper ray; the lower one is its negative."""
        return np.pi - np.pi / self.order

    def key(self):
        return {"k": self.k, "t": list(self.t), "R": float(self.R), "tol": float(self.tol)}


def _arg(z, branch):
    a = np.angle(z)
    if branch == "below":
        a = np.where((a > 0) & (z.real < 0), a - 2 * np.pi, a)
    elif branch == "above":
        a = np.where((a <= 0) & (z.real < 0), a + 2 * np.pi, a)
    elif branch != "principal":
        raise InvalidArgumentError(f"unknown branch {branch!r}")
    return a


def _power(z, p, branch="principal"):
    z = np.asarray(z, dtype=complex)
    return np.abs(z) ** p * np.exp(1j * p * _arg(z, branch))


def theta(zeta, params, branch="principal"):
    """Phase (2/(4k+3)) zeta^{(4k+3)/2} - 2 sum_j (-1)^j t_j zeta^{(2j+1)/2} / (2j+1)."""
    zeta = np.asarray(zeta, dtype=complex)
    out = 2.0 / params.order * _power(zeta, params.order / 2, branch)
    for j, tj in enumerate(params.t):
        if tj != 0:
            out = out - 2 * (-1) ** j * tj / (2 * j + 1) * _power(zeta, (2 * j + 1) / 2, branch)
    return out


def theta_prime(zeta, params, branch="principal"):
    zeta = np.asarray(zeta, dtype=complex)
    out = _power(zeta, (params.order - 2) / 2, branch)
    for j, tj in enumerate(params.t):
        if tj != 0:
            out = out - (-1) ** j * tj * _power(zeta, (2 * j - 1) / 2, branch)
    return out


def _check_nonzero(zeta):
    if np.any(zeta == 0):
        raise InvalidArgumentError("W is singular at zeta = 0")


def _weight(zeta, th, branch):
    q = _power(zeta, -0.25, branch)
    out = np.zeros(zeta.shape + (2, 2), dtype=complex)
    e = np.exp(-th)
    out[..., 0, :] = q[..., None] * N_MATRIX[0]
    out[..., 1, :] = (1 / q)[..., None] * N_MATRIX[1]
    out[..., :, 0] *= e[..., None]
    out[..., :, 1] /= e[..., None]
    return out


def W(zeta, params, branch="principal"):
    """zeta^{-sigma3/4} N e^{-theta sigma3} on the requested branch."""
    zeta = np.asarray(zeta, dtype=complex)
    _check_nonzero(zeta)
    return _weight(zeta, theta(zeta, params, branch), branch)


def W_inv(zeta, params, branch="principal"):
    zeta = np.asarray(zeta, dtype=complex)
    _check_nonzero(zeta)
    th = theta(zeta, params, branch)
    q = _power(zeta, -0.25, branch)
    Ninv = np.linalg.inv(N_MATRIX)
    e = np.exp(th)
    out = np.zeros(zeta.shape + (2, 2), dtype=complex)
    # (e^{-theta s3})^{-1} Ninv (zeta^{-s3/4})^{-1}
    out[..., 0, :] = e[..., None] * Ninv[0]
    out[..., 1, :] = (1 / e)[..., None] * Ninv[1]
    out[..., :, 0] /= q[..., None]
    out[..., :, 1] *= q[..., None]
    return out


def W_apply(zeta, vec, params, branch="principal"):
    """W @ vec without forming exponentials that multiply zero entries."""
    zeta = np.asarray(zeta, dtype=complex)
    _check_nonzero(zeta)
    th = theta(zeta, params, branch)
    q = _power(zeta, -0.25, branch)
    v = np.broadcast_to(np.asarray(vec, dtype=complex), zeta.shape + (2,))
    with np.errstate(over="ignore", invalid="ignore"):
        a = np.where(v[..., 0] != 0, v[..., 0] * np.exp(-th), 0)
        b = np.where(v[..., 1] != 0, v[..., 1] * np.exp(th), 0)
    m = np.stack([a, b], axis=-1) @ N_MATRIX.T
    return m * np.stack([q, 1 / q], axis=-1)


def W_deriv_apply(zeta, vec, params, branch="principal"):
    """(dW/dzeta) @ vec for vectors vec (..., 2)."""
    zeta = np.asarray(zeta, dtype=complex)
    tp = theta_prime(zeta, params, branch)
    v = np.broadcast_to(np.asarray(vec, dtype=complex), zeta.shape + (2,))
    a = W_apply(zeta, v, params, branch)
    b = W_apply(zeta, v * np.array([1, -1]), params, branch)
    return -(a * np.array([1, -1])) / (4 * zeta[..., None]) - tp[..., None] * b


def conjugated_jump(zeta, S, params, branch="principal"):
    """W S W^{-1}, combining exponentials so decaying entries never overflow."""
    zeta = np.asarray(zeta, dtype=complex)
    _check_nonzero(zeta)
    th = theta(zeta, params, branch)
    q = _power(zeta, -0.25, branch)
    sgn = np.array([1.0, -1.0])
    # (e^{-theta s3} S e^{theta s3})_{ij} = S_ij e^{-theta (s_i - s_j)}
    expo = -th[..., None, None] * (sgn[:, None] - sgn[None, :])
    mid = np.where(S != 0, S * np.exp(np.where(S != 0, expo, 0)), 0)
    Q = np.zeros(zeta.shape + (2, 2), dtype=complex)
    Q[..., 0, :] = q[..., None] * N_MATRIX[0]
    Q[..., 1, :] = (1 / q)[..., None] * N_MATRIX[1]
    Qinv = np.linalg.inv(Q)
    # conjugate the deviation so that tiny off-diagonal entries stay exact
    return np.eye(2) + Q @ (mid - np.eye(2)) @ Qinv


def _ray_jump_size(params, r):
    a = params.ray_angle
    worst = 0.0
    for ang, S in ((0.0, S1), (a, S2), (-a, S4)):
        z = np.array([r * np.exp(1j * ang)])
        with np.errstate(over="ignore", invalid="ignore"):
            G = conjugated_jump(z, S, params) - np.eye(2)
        v = float(np.abs(G).max())
        worst = max(worst, v if np.isfinite(v) else np.inf)
    return worst


def truncation_radius(params, level=DECAY_LEVEL, start=2.0):
    """Smallest R >= start with |W S_j W^{-1} - I| < level on every ray."""

    def ok(r):
        return _ray_jump_size(params, r) < level

    hi = float(start)
    while not ok(hi):
        hi *= 1.25
        if hi > 1e4:
            raise InvalidArgumentError("ray jumps do not decay")
    if hi == start:
        return hi
    lo = hi / 1.25
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    # lower-order terms can make the decay non-monotone; insist it persists
    for r in np.linspace(hi, 4 * hi, 64):
        if not ok(r):
            return truncation_radius(params, level, start=float(r) * 1.01)
    return float(hi)


RAY1, RAY2, RAY4, ARC21, ARC14, ARC42 = range(6)


def build_psi_problem(params, degree=32):
    """Canonical-form RH problem for Psi^(2k) on the truncated contour."""
    a = params.ray_angle
    R = params.R
    e2, e4 = np.exp(1j * a), np.exp(-1j * a)
    comps = [
        ContourComponent.segment(1.0, R, degree=degree, start_label="one", name="ray1"),
        ContourComponent.segment(R * e2, e2, degree=degree, end_label="up", name="ray2"),
        ContourComponent.segment(R * e4, e4, degree=degree, end_label="down", name="ray4"),
        ContourComponent.arc(0, 1.0, a, 0.0, degree=degree, start_label="up", end_label="one",
                             name="arc21"),
        ContourComponent.arc(0, 1.0, 0.0, -a, degree=degree, start_label="one", end_label="down",
                             name="arc14"),
        ContourComponent.arc(0, 1.0, -a, a - 2 * np.pi, degree=degree, start_label="down",
                             end_label="up", name="arc42"),
    ]
    Sray = {RAY1: S1, RAY2: S2, RAY4: S4}

    def jump(i, z):
        z = np.asarray(z, dtype=complex)
        if i in Sray:
            return conjugated_jump(z, Sray[i], params)
        if i == ARC21:
            return PRE_12 @ W_inv(z, params)
        if i == ARC14:
            return PRE_41 @ W_inv(z, params)
        if i == ARC42:
            return W_inv(z, params, "below")
        raise InvalidArgumentError(f"no component {i}")

    junctions = {"one": 1.0 + 0j, "up": complex(e2), "down": complex(e4)}
    return CanonicalRHProblem(comps, jump, junctions, name=f"psi_k{params.k}")


def region_prefactor(zeta, params):
    """Region matrix with Phi = Psi * prefactor (one point); raises on region boundaries."""
    zeta = complex(zeta)
    r = abs(zeta)
    a = params.ray_angle
    if abs(r - 1) < 1e-14:
        raise InvalidArgumentError("point on the unit circle is ambiguous: pass a side")
    if r > 1:
        return W(np.array(zeta), params)
    phi = np.angle(zeta)
    if np.any(np.isclose(abs(phi), [0.0, a, np.pi], rtol=0, atol=1e-14)) or zeta == 0:
        raise InvalidArgumentError("point on a sector boundary is ambiguous")
    if -a < phi < 0:
        return PRE_41
    if 0 < phi < a:
        return PRE_12
    if phi > a:
        return PRE_23
    return PRE_34


def phi_from_psi(sol, zeta, params):
    """Phi at an off-contour point from the solved Psi."""
    P = evaluate_psi(sol, np.array([zeta]))[0]
    return P @ region_prefactor(zeta, params)


# first column of the upper-sector Phi, continued to the real line
_INNER_VEC = PRE_12[:, 0]


@dataclass
class KernelEvaluator(IntegrableKernel):
    """Solved Psi^(2k) plus routines for (Phi_1, Phi_2) and the kernel on R."""

    params: ModelParams
    solution: object
    check: bool = True
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        comp1 = self.solution.problem.components[RAY1]
        self._R = abs(comp1.end)
        if self.check:
            self.info["continuation_mismatch"] = self.continuation_check()

    @classmethod
    def solve(cls, params, rh_tol=None, cap=512, check=True, cache=None):
        """Solve Psi^(2k) adaptively; ``cache`` is an optional :class:`ResultCache`."""
        tol = max(params.tol if rh_tol is None else rh_tol, 1e-13)
        prob = build_psi_problem(params)
        key = solution_key("psi", params.key(), tol)
        sol = load_solution(cache, key, prob) if cache is not None and cache.enabled else None
        if sol is None:
            try:
                sol = adaptive_solve(prob, tol, cap=cap, relative=True)
            except UnresolvedError as err:
                if err.best is None or err.estimate > 1e-8:
                    raise
                log.warning("Psi solve for k=%d reached only %.1e", params.k, err.estimate)
                sol = err.best
            if cache is not None:
                store_solution(cache, key, sol)
        return cls(params, sol, check)

    # --- column (Phi_1, Phi_2) on the real line -------------------------
    def _column_raw(self, u, deriv):
        u = np.asarray(u, dtype=float)
        z = u.astype(complex)
        f = np.zeros(u.shape + (2,), dtype=complex)
        df = np.zeros_like(f) if deriv else None
        sol = self.solution
        prm = self.params

        inner = np.abs(u) < 1
        if np.any(inner):
            zi = z[inner]
            P = evaluate_psi(sol, zi)
            f[inner] = P @ _INNER_VEC
            if deriv:
                df[inner] = evaluate_psi_deriv(sol, zi) @ _INNER_VEC

        e1 = np.array([1, 0], dtype=complex)
        for mask, side, comp in (((u > 1) & (u < self._R), PLUS, RAY1), (u > self._R, OFF, None)):
            if not np.any(mask):
                continue
            zr = z[mask]
            P = evaluate_psi(sol, zr, side, comp)
            We = W_apply(zr, e1, prm)
            f[mask] = np.einsum("...ij,...j->...i", P, We)
            if deriv:
                dP = evaluate_psi_deriv(sol, zr, side, comp)
                dW = W_deriv_apply(zr, np.broadcast_to(e1, zr.shape + (2,)), prm)
                df[mask] = (np.einsum("...ij,...j->...i", dP, We)
                            + np.einsum("...ij,...j->...i", P, dW))

        neg = u < -1
        if np.any(neg):
            zn = z[neg]
            v = np.array([1, 1], dtype=complex)
            P = evaluate_psi(sol, zn)
            Wv = W_apply(zn, v, prm, "above")
            f[neg] = np.einsum("...ij,...j->...i", P, Wv)
            if deriv:
                dP = evaluate_psi_deriv(sol, zn)
                dW = W_deriv_apply(zn, np.broadcast_to(v, zn.shape + (2,)), prm, "above")
                df[neg] = (np.einsum("...ij,...j->...i", dP, Wv)
                           + np.einsum("...ij,...j->...i", P, dW))
        return (f, df) if deriv else f

    def special_points(self):
        # junction and free-end points of the contour on the real line
        return (-1.0, 1.0, self._R)

    def continuation_check(self):
        """Two-path continuation at u = -1.5 and derivative-consistent continuity at +-1, R."""
        z = np.array([-1.5 + 0j])
        P = evaluate_psi(self.solution, z)
        a = np.einsum("...ij,...j->...i", P, W_apply(z, [1, 1], self.params, "above"))
        b = np.einsum("...ij,...j->...i", P, W_apply(z, [1, -1], self.params, "below"))
        worst = float(np.abs(a - b).max() / max(1.0, np.abs(a).max()))
        h = 1e-3
        for p in (-1.0, 1.0, self._R):
            f, df = self._column_raw(np.array([p - h, p + h]), True)
            jumpv = f[1] - f[0] - h * (df[0] + df[1])
            worst = max(worst, float(np.abs(jumpv).max() / max(1.0, np.abs(f).max())))
        if worst > 1e-6:
            raise ConsistencyError(f"analytic continuation of the kernel column failed ({worst:.2e})")
        return worst


def phi12_column(evaluator, u):
    """(Phi_1(u), Phi_2(u)) for real u, stacked on the last axis."""
    return evaluator.column(u)


def kernel_K(evaluator, u, v):
    """K(u, v) for real u, v (broadcasting)."""
    return evaluator(u, v)


__all__ = ["ModelParams", "theta", "theta_prime", "W", "W_inv", "truncation_radius",
           "build_psi_problem", "phi_from_psi", "region_prefactor", "KernelEvaluator",
           "phi12_column", "kernel_K", "W_apply", "conjugated_jump", "S1", "S2", "S3", "S4", "N_MATRIX"]
