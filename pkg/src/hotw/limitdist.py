"""Formal large-k limit: the Y problem, its parametrices and F_inf on (s, 1).

As k grows the ray jumps vanish and, inside the unit circle, the weight
tends to zeta^{-sigma3/4} N.  What is left has jumps on the two half circles
only, discontinuous at +-1.  Local parametrices with the same jumps are
divided out in small disks around +-1, which leaves a problem with smooth
jumps on the arcs outside the disks and on the disk boundaries.

Parametrix variable: m(zeta) = -i (zeta + i)/(zeta - i) sends the unit
circle to the real line, the lower half circle to (-1, 1) and the inside
of the circle to the upper half plane.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cache import load_solution, solution_key, store_solution
from .contour import CanonicalRHProblem, ContourComponent
from .exceptions import InvalidArgumentError, UnresolvedError
from .fredholm import DetResult, _det_and_logderiv, M_CAP, M_START
from .kernels import IntegrableKernel
from .painleve import N_MATRIX, PRE_12, PRE_41, S2, S3, _power
from .rhsolver import adaptive_solve, evaluate_psi, evaluate_psi_deriv

log = logging.getLogger(__name__)

DEFAULT_RADIUS = 0.25
_L = np.array([[1, 0], [-1, 1]], dtype=complex)
_B = np.array([[np.exp(-2j * np.pi / 3), np.exp(2j * np.pi / 3)], [1, 1]], dtype=complex)
_B_INV = np.linalg.inv(_B)
_S3S2 = S3 @ S2


class AccuracyWarning(UserWarning):
    """Result is close to the singular point -1 of the limiting column."""


@dataclass(frozen=True)
class ParametrixConfig:
    r: float = DEFAULT_RADIUS

    def __post_init__(self):
        if not 0 < self.r <= 0.5:
            raise InvalidArgumentError("disk radius must lie in (0, 0.5]")

    @property
    def angle(self):
        """theta with |e^{i theta} - 1| = r."""
        return float(2 * np.arcsin(self.r / 2))

    def junctions(self):
        t = self.angle
        return {"ur": np.exp(1j * t), "lr": np.exp(-1j * t),
                "ul": -np.exp(-1j * t), "ll": -np.exp(1j * t)}


def W_inf(zeta, branch="principal"):
    """zeta^{-sigma3/4} N."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(zeta == 0):
        raise InvalidArgumentError("W_inf is singular at zeta = 0")
    q = _power(zeta, -0.25, branch)
    out = np.empty(zeta.shape + (2, 2), dtype=complex)
    out[..., 0, :] = q[..., None] * N_MATRIX[0]
    out[..., 1, :] = (1 / q)[..., None] * N_MATRIX[1]
    return out


def W_inf_inv(zeta, branch="principal"):
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(zeta == 0):
        raise InvalidArgumentError("W_inf is singular at zeta = 0")
    q = _power(zeta, -0.25, branch)
    Ninv = np.linalg.inv(N_MATRIX)
    out = np.empty(zeta.shape + (2, 2), dtype=complex)
    out[..., :, 0] = Ninv[:, 0] / q[..., None]
    out[..., :, 1] = Ninv[:, 1] * q[..., None]
    return out


def circle_map(zeta):
    zeta = np.asarray(zeta, dtype=complex)
    return -1j * (zeta + 1j) / (zeta - 1j)


def circle_map_deriv(zeta):
    zeta = np.asarray(zeta, dtype=complex)
    return -2.0 / (zeta - 1j) ** 2


def _case(zeta, inside):
    if inside is None:
        return np.abs(zeta) < 1
    return np.broadcast_to(np.asarray(inside, bool), zeta.shape)


def _check_disk(zeta, center, r):
    if np.any(np.abs(zeta - center) >= r):
        raise InvalidArgumentError(f"point outside the disk |zeta - ({center})| < {r}")


def P1(zeta, r=DEFAULT_RADIUS, inside=None, deriv=False):
    """Parametrix near +1; ``inside`` forces the |zeta| < 1 case (on the circle)."""
    zeta = np.asarray(zeta, dtype=complex)
    _check_disk(zeta, 1.0, r)
    m = circle_map(zeta)
    lg = np.log(m - 1) / (2j * np.pi)
    U = np.zeros(zeta.shape + (2, 2), dtype=complex)
    U[..., 0, 0] = U[..., 1, 1] = 1
    U[..., 0, 1] = lg
    P = _L @ U @ S2
    ins = _case(zeta, inside)
    out = np.where(ins[..., None, None], P, P @ _S3S2 @ W_inf_inv(zeta))
    if not deriv:
        return out
    dU = np.zeros_like(U)
    dU[..., 0, 1] = circle_map_deriv(zeta) / (m - 1) / (2j * np.pi)
    dP = _L @ dU @ S2
    Wi = W_inf_inv(zeta)
    dWi = _W_inf_inv_deriv(zeta, "principal")
    dout = np.where(ins[..., None, None], dP, dP @ _S3S2 @ Wi + P @ _S3S2 @ dWi)
    return out, dout


def Pm1(zeta, r=DEFAULT_RADIUS, inside=None, deriv=False):
    """Parametrix near -1; ``inside`` forces the |zeta| < 1 case (on the circle)."""
    zeta = np.asarray(zeta, dtype=complex)
    _check_disk(zeta, -1.0, r)
    m = circle_map(zeta)
    base = -1 - m
    p = base ** (1 / 6)
    D = np.zeros(zeta.shape + (2, 2), dtype=complex)
    D[..., 0, 0] = p
    D[..., 1, 1] = 1 / p
    P = _B @ D @ _B_INV
    ins = _case(zeta, inside)
    Wi = W_inf_inv(zeta, "above")
    out = np.where(ins[..., None, None], P, P @ _S3S2 @ Wi)
    if not deriv:
        return out
    dbase = -circle_map_deriv(zeta)
    dD = np.zeros_like(D)
    dD[..., 0, 0] = p * dbase / (6 * base)
    dD[..., 1, 1] = -(1 / p) * dbase / (6 * base)
    dP = _B @ dD @ _B_INV
    dWi = _W_inf_inv_deriv(zeta, "above")
    dout = np.where(ins[..., None, None], dP, dP @ _S3S2 @ Wi + P @ _S3S2 @ dWi)
    return out, dout


def _W_inf_inv_deriv(zeta, branch):
    # W^{-1} = N^{-1} zeta^{sigma3/4}; derivative multiplies column j by +-1/(4 zeta)
    Wi = W_inf_inv(zeta, branch)
    return Wi * (np.array([1.0, -1.0]) / (4 * zeta[..., None]))[..., None, :]


DELTA1, DELTA2, C1_OUT, C1_IN, CM1_OUT, CM1_IN = range(6)


def build_Y_problem(config=None, degree=32):
    """Canonical-form problem for Y (arcs of the unit circle plus two split circles)."""
    config = ParametrixConfig() if config is None else config
    r, th = config.r, config.angle
    J = config.junctions()
    # relative angles of the junctions seen from the disk centres
    phi1 = float(np.angle(J["ur"] - 1))
    phim = float(np.angle(J["ul"] + 1))
    comps = [
        ContourComponent.arc(0, 1.0, np.pi - th, th, degree=degree, start_label="ul", end_label="ur",
                             name="delta1"),
        ContourComponent.arc(0, 1.0, -th, -(np.pi - th), degree=degree, start_label="lr",
                             end_label="ll", name="delta2"),
        ContourComponent.arc(1.0, r, phi1, -phi1, degree=degree, start_label="ur", end_label="lr",
                             name="circ1_out"),
        ContourComponent.arc(1.0, r, -phi1, phi1 - 2 * np.pi, degree=degree, start_label="lr",
                             end_label="ur", name="circ1_in"),
        ContourComponent.arc(-1.0, r, -phim, phim - 2 * np.pi, degree=degree, start_label="ll",
                             end_label="ul", name="circm1_out"),
        ContourComponent.arc(-1.0, r, phim, -phim, degree=degree, start_label="ul", end_label="ll",
                             name="circm1_in"),
    ]
    # the lower junctions lie on the branch cuts of the parametrices: evaluate
    # each circle arc from its own side of the unit circle
    push = 1e-13
    rr = r * (1 + 1e-9)

    def jump(i, z):
        z = np.asarray(z, dtype=complex)
        if i == DELTA1:
            return PRE_12 @ W_inf_inv(z)
        if i == DELTA2:
            return PRE_41 @ W_inf_inv(z)
        if i in (C1_OUT, CM1_OUT):
            zz = z * (1 + push)
        elif i in (C1_IN, CM1_IN):
            zz = z * (1 - push)
        else:
            raise InvalidArgumentError(f"no component {i}")
        if i in (C1_OUT, C1_IN):
            return P1(zz, rr, inside=(i == C1_IN))
        return Pm1(zz, rr, inside=(i == CM1_IN))

    return CanonicalRHProblem(comps, jump, {k: complex(v) for k, v in J.items()}, name="Y")


_INNER_VEC = PRE_12[:, 0]


@dataclass
class LimitKernel(IntegrableKernel):
    """Kernel of the formal k -> inf operator from the solved Y problem."""

    config: ParametrixConfig
    solution: object
    info: dict = field(default_factory=dict)

    @classmethod
    def solve(cls, config=None, rh_tol=1e-10, cap=256, cache=None):
        config = ParametrixConfig() if config is None else config
        prob = build_Y_problem(config)
        key = solution_key("y", {"r": config.r}, rh_tol)
        sol = load_solution(cache, key, prob) if cache is not None and cache.enabled else None
        if sol is None:
            sol = adaptive_solve(prob, rh_tol, cap=cap, relative=True)
            if cache is not None:
                store_solution(cache, key, sol)
        return cls(config, sol)

    def special_points(self):
        r = self.config.r
        return (-1 + r, 1 - r)

    def _column_raw(self, u, deriv):
        # the limiting column vanishes outside the unit circle
        u = np.asarray(u, dtype=float)
        z = u.astype(complex)
        f = np.zeros(u.shape + (2,), dtype=complex)
        df = np.zeros_like(f) if deriv else None
        inside = np.abs(u) < 1
        if not np.any(inside):
            return (f, df) if deriv else f
        zi = z[inside]
        Yv = evaluate_psi(self.solution, zi)
        dY = evaluate_psi_deriv(self.solution, zi) if deriv else None
        r = self.config.r
        P = np.broadcast_to(np.eye(2, dtype=complex), zi.shape + (2, 2)).copy()
        dP = np.zeros_like(P)
        d1 = np.abs(zi - 1) < r
        dm = np.abs(zi + 1) < r
        if np.any(d1):
            res = P1(zi[d1], r, inside=True, deriv=deriv)
            P[d1], dP[d1] = res if deriv else (res, 0)
        if np.any(dm):
            res = Pm1(zi[dm], r, inside=True, deriv=deriv)
            P[dm], dP[dm] = res if deriv else (res, 0)
        Psi = Yv @ P
        f[inside] = Psi @ _INNER_VEC
        if deriv:
            df[inside] = (dY @ P + Yv @ dP) @ _INNER_VEC
        return (f, df) if deriv else f


def F_inf(kernel, s, tol=1e-10, m_cap=M_CAP, m_start=M_START):
    """det(I - K_inf) on (s, 1) with m doubled until |F_m - F_2m| < tol."""
    s = float(s)
    if not -1 < s < 1:
        raise InvalidArgumentError("F_inf needs -1 < s < 1")
    if s <= -1 + 0.05:
        warnings.warn("accuracy degrades as s approaches -1", AccuracyWarning)
    m = m_start
    prev = _det_and_logderiv(kernel, s, 1.0, m, True)
    hist = [(m, prev[0])]
    while 2 * m <= m_cap:
        m *= 2
        cur = _det_and_logderiv(kernel, s, 1.0, m, True)
        hist.append((m, cur[0]))
        if abs(cur[0] - prev[0]) < tol:
            res = DetResult(s, cur[0], cur[1], m, 1.0, abs(cur[0] - prev[0]),
                            density=cur[0] * cur[2], log_deriv=cur[2])
            res.info["history"] = hist
            return res
        prev = cur
    best = DetResult(s, prev[0], prev[1], m, 1.0, abs(hist[-1][1] - hist[-2][1]),
                     density=prev[0] * prev[2], log_deriv=prev[2])
    raise UnresolvedError(f"F_inf({s}) not converged by m={m}", best=best, estimate=best.err)


__all__ = ["ParametrixConfig", "W_inf", "W_inf_inv", "P1", "Pm1", "build_Y_problem", "LimitKernel",
           "F_inf", "circle_map", "AccuracyWarning", "DEFAULT_RADIUS"]
