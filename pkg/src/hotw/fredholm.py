"""Nystrom evaluation of Fredholm determinants det(I - K) on an interval.

The operator is discretized with an m-point Gauss-Legendre rule and the
symmetrized matrix sqrt(w_i) K(x_i, x_j) sqrt(w_j).  For kernels on (s, inf)
the interval is truncated where the kernel diagonal has decayed.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .exceptions import InvalidArgumentError, SingularOperatorError, UnresolvedError

log = logging.getLogger(__name__)

M_START = 20
M_CAP = 640


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def mapped(self, a, b):
        h = 0.5 * (b - a)
        return a + h * (self.nodes + 1), h * self.weights


def _legendre(m, x):
    # P_m and P_m' by the three-term recurrence
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, m + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    if m == 0:
        return p0, np.zeros_like(x)
    dp = m * (x * p1 - p0) / (x * x - 1)
    return p1, dp


@lru_cache(maxsize=32)
def _gauss_legendre_nodes(m):
    k = np.arange(1, m + 1)
    # Tricomi-type initial guesses, then Newton on P_m
    x = np.cos(np.pi * (k - 0.25) / (m + 0.5)) * (1 - (m - 1) / (8.0 * m ** 3))
    for _ in range(100):
        p, dp = _legendre(m, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    x = np.sort(x)
    return 0.5 * (x - x[::-1])


def gauss_legendre(m):
    """m-point Gauss-Legendre rule on (-1, 1) by Newton iteration."""
    m = int(m)
    if m < 1 or m > 2048:
        raise InvalidArgumentError("m must satisfy 1 <= m <= 2048")
    if m == 1:
        return QuadratureRule(np.array([0.0]), np.array([2.0]))
    x = _gauss_legendre_nodes(m)
    _, dp = _legendre(m, x)
    w = 2.0 / ((1 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


def nystrom_matrix(kernel, a, b, m):
    """Nodes, weights and sqrt(w) K sqrt(w) for the interval (a, b)."""
    x, w = gauss_legendre(m).mapped(a, b)
    Kx = _kernel_matrix(kernel, x)
    if not np.all(np.isfinite(Kx)):
        i, j = np.argwhere(~np.isfinite(Kx))[0]
        raise InvalidArgumentError(f"kernel is not finite at ({x[i]:.6g}, {x[j]:.6g})")
    sw = np.sqrt(w)
    return x, w, sw[:, None] * Kx * sw[None, :]


def _kernel_matrix(kernel, x, y=None):
    if hasattr(kernel, "matrix"):
        return np.asarray(kernel.matrix(x, y), dtype=float)
    y = x if y is None else y
    return np.asarray(kernel(x[:, None], y[None, :]), dtype=float)


def fredholm_det(kernel, interval, m):
    """det(I - K) on the interval with an m-point rule (pivoted LU)."""
    a, b = map(float, interval)
    if not b > a:
        raise InvalidArgumentError("interval must satisfy b > a")
    _, _, A = nystrom_matrix(kernel, a, b, m)
    sign, logabs = np.linalg.slogdet(np.eye(m) - A)
    return float(sign * np.exp(logabs))


def _kernel_diag(kernel, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if hasattr(kernel, "diagonal"):
        return np.asarray(kernel.diagonal(x), dtype=float)
    return np.asarray(kernel(x, x), dtype=float)


def truncation_point(kernel, s, tol, step=0.5, limit=200.0):
    """Smallest b >= max(s, 0) + 2 on a 0.5 grid with |K(b, b)| < tol * 1e-2."""
    b = max(s, 0.0) + 2.0
    while abs(_kernel_diag(kernel, b)[0]) >= tol * 1e-2:
        b += step
        if b > limit:
            raise UnresolvedError("kernel diagonal does not decay; cannot truncate", best=None)
    return b


@dataclass
class DetResult:
    s: float
    F: float
    logF: float
    m: int
    b: float
    err: float
    density: float = float("nan")
    log_deriv: float = float("nan")
    info: dict = field(default_factory=dict)

    def as_dict(self):
        d = asdict(self)
        d.pop("info")
        return d


def _det_and_logderiv(kernel, s, b, m, want_deriv):
    x, w, A = nystrom_matrix(kernel, s, b, m)
    I_A = np.eye(m) - A
    sign, logabs = np.linalg.slogdet(I_A)
    F = float(sign * np.exp(logabs))
    logF = float(logabs) if sign > 0 else float("nan")
    ld = float("nan")
    if want_deriv:
        ks = np.sqrt(w) * _kernel_matrix(kernel, x, np.array([s]))[:, 0]
        kss = float(_kernel_diag(kernel, s)[0])
        try:
            lu = sla.lu_factor(I_A, check_finite=False)
            v = sla.lu_solve(lu, ks, check_finite=False)
        except sla.LinAlgError as err:
            raise SingularOperatorError("I - K is numerically singular") from err
        if not np.all(np.isfinite(v)):
            raise SingularOperatorError("I - K is numerically singular")
        ld = kss + float(ks @ v)
    return F, logF, ld


def distribution_F(kernel, s, tol=1e-12, m_cap=M_CAP, with_density=True, b=None,
                   m_start=M_START, log_scale=False, deriv_tol=None):
    """F(s) = det(I - K) on (s, inf), truncated at b, m doubled until converged.

    The error is |F_m - F_2m|, or |log F_m - log F_2m| with ``log_scale``
    (useful deep in the left tail where F itself is tiny).  With
    ``deriv_tol`` the log-derivative must also settle, relative to its size,
    or stop improving (rounding floor) once m >= 80.
    """
    s = float(s)
    if b is None:
        b = truncation_point(kernel, s, tol if not log_scale else 1e-14)
    want = with_density or deriv_tol is not None
    m = m_start
    prev = _det_and_logderiv(kernel, s, b, m, want)
    history = [(m, prev[0])]
    last_derr = np.inf
    while True:
        m2 = 2 * m
        if m2 > m_cap:
            res = DetResult(s, prev[0], prev[1], m, b, float("nan"))
            res.log_deriv = prev[2]
            res.density = prev[0] * prev[2]
            est = abs(history[-1][1] - history[-2][1]) if len(history) > 1 else np.inf
            raise UnresolvedError(f"determinant at s={s} not converged by m={m}", best=res,
                                  estimate=est)
        cur = _det_and_logderiv(kernel, s, b, m2, want)
        history.append((m2, cur[0]))
        if log_scale:
            err = abs(cur[1] - prev[1])
            err = err if np.isfinite(err) else np.inf
        else:
            err = abs(cur[0] - prev[0])
        derr = abs(cur[2] - prev[2]) if want else 0.0
        d_ok = (deriv_tol is None or derr < deriv_tol * max(1.0, abs(cur[2]))
                or (m2 >= 80 and derr > 0.25 * last_derr))
        if err < tol and d_ok:
            res = DetResult(s, cur[0], cur[1], m2, b, err)
            res.log_deriv = cur[2]
            res.density = cur[0] * cur[2]
            res.info["history"] = history
            res.info["deriv_err"] = derr
            return res
        m, prev, last_derr = m2, cur, derr


def one_minus_F(kernel, s, rtol=1e-10, m_cap=M_CAP, m_start=M_START, step=0.5, limit=200.0):
    """1 - F(s) to relative accuracy, from the eigenvalues of the Nystrom matrix.

    1 - det(I - A) = -expm1(sum log1p(-lambda)), which stays accurate when
    1 - F is far below the rounding level of F.  The interval is truncated
    where K(b, b) has dropped by 1e-16 relative to K(s, s).
    """
    s = float(s)
    k0 = abs(_kernel_diag(kernel, s)[0])
    b = s + step
    while abs(_kernel_diag(kernel, b)[0]) > 1e-16 * k0:
        b += step
        if b > limit:
            raise UnresolvedError("kernel diagonal does not decay; cannot truncate", best=None)

    def value(m):
        _, _, A = nystrom_matrix(kernel, s, b, m)
        lam = np.linalg.eigvalsh(0.5 * (A + A.T))
        return float(-np.expm1(np.sum(np.log1p(-lam))))

    m = m_start
    prev = value(m)
    while 2 * m <= m_cap:
        m *= 2
        cur = value(m)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise UnresolvedError(f"1 - F({s}) not converged by m={m}", best=prev,
                          estimate=abs(cur - prev) / max(abs(cur), 1e-300))


def density_spectral(kernel, a, b, n=64, tol=1e-13, m_cap=M_CAP, panel=None):
    """F' on [a, b] by differentiating Chebyshev interpolants of F.

    With ``panel`` the interval is split into equal pieces no wider than
    ``panel``, each with its own n-point interpolant.  Returns a callable
    x -> F'(x); an independent route to the density.
    """
    from .chebyshev import ChebSeries, cheb_points, diff_coeffs, eval_series, vals_to_coeffs
    npan = 1 if panel is None else max(1, int(np.ceil((b - a) / panel - 1e-12)))
    edges = np.linspace(a, b, npan + 1)
    x = cheb_points(n)
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        s = 0.5 * (hi - lo) * (x + 1) + lo
        F = np.array([distribution_F(kernel, si, tol, m_cap, with_density=False).F for si in s])
        pieces.append(ChebSeries(diff_coeffs(vals_to_coeffs(F).coeffs)))

    def fprime(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        j = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, npan - 1)
        out = np.empty(t.shape)
        for i in np.unique(j):
            lo, hi = edges[i], edges[i + 1]
            sel = j == i
            out[sel] = 2.0 / (hi - lo) * np.real(eval_series(pieces[i], 2 * (t[sel] - lo) / (hi - lo) - 1))
        return out
    return fprime


def _grid_point(kernel, s, tol, m_cap, log_scale):
    try:
        r = distribution_F(kernel, s, tol, m_cap, log_scale=log_scale)
        r.info["converged"] = True
    except UnresolvedError as err:
        nan = float("nan")
        r = err.best if isinstance(err.best, DetResult) else DetResult(s, nan, nan, 0, nan, nan)
        r.err = float("nan")
        r.info["converged"] = False
    return r


def bounded_map(fn, items, workers=None):
    """list(map(fn, items)) on at most ``workers`` threads (default: up to 4 cores)."""
    items = list(items)
    workers = workers or min(4, os.cpu_count() or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def evaluate_grid(kernel, s_values, tol=1e-12, m_cap=M_CAP, workers=None, log_scale=False):
    """distribution_F over a grid as a bounded thread map, in grid order.

    Unresolved points keep their best values with ``err = nan`` and
    ``info["converged"] = False``.
    """
    return bounded_map(lambda s: _grid_point(kernel, float(s), tol, m_cap, log_scale), s_values,
                       workers)


def log_deriv(kernel, s, tol=1e-12, m_cap=M_CAP):
    """d/ds log det(I - K_s), i.e. the resolvent diagonal R(s, s)."""
    return distribution_F(kernel, s, tol, m_cap).log_deriv


def density(kernel, s, tol=1e-12, m_cap=M_CAP):
    """F'(s) = F(s) * d/ds log F(s)."""
    return distribution_F(kernel, s, tol, m_cap).density


__all__ = ["QuadratureRule", "gauss_legendre", "fredholm_det", "nystrom_matrix", "truncation_point",
           "DetResult", "distribution_F", "evaluate_grid", "one_minus_F", "bounded_map", "density_spectral", "log_deriv", "density"]
