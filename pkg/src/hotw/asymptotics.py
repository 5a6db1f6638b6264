"""Large-gap expansion, estimation of the constant term, and tail fits.

For s -> -inf,

    log F_k(s) = -c1(k) |s|^{4k+3} - ((2k+1)/8) log|s| + chi_k + o(1),

with c1(k) = Gamma(2k+3/2)^2 / (Gamma(3/2)^2 Gamma(2k+2)^2) / (4(4k+3)).
The constant is estimated from

    chi(s) = log F(M) - A(M) - int_s^M (d/ds log F - A'(sigma)) d sigma,

with the integrand expanded in piecewise Chebyshev series.
"""
import logging
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.special import gammaln

from .chebyshev import cheb_points, integral_weights, tail_estimate, vals_to_coeffs
from .exceptions import InvalidArgumentError, NoConvergenceError, UnresolvedError
from .fredholm import bounded_map, distribution_F

log = logging.getLogger(__name__)

PANEL_WIDTH = 0.5
PANEL_DEGREE = 24
PLATEAU_POINTS = 3

# constant term for k = 0, (1/24) log 2 + zeta'(-1)
CHI0_EXACT = float(mpmath.log(2) / 24 + mpmath.zeta(-1, derivative=1))


class FloorDominatedWarning(UserWarning):
    """Residuals or tail values sit at the numerical floor."""


@dataclass(frozen=True)
class GapExpansion:
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise InvalidArgumentError("k must be a nonnegative integer")

    @property
    def power(self):
        return 4 * self.k + 3

    @property
    def c1(self):
        k = self.k
        lg = 2 * gammaln(2 * k + 1.5) - 2 * gammaln(1.5) - 2 * gammaln(2 * k + 2)
        return float(np.exp(lg) / (4 * (4 * k + 3)))

    @property
    def log_coef(self):
        return (2 * self.k + 1) / 8

    def __call__(self, s):
        return A(s, self.k)

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        _check_negative(s)
        a = np.abs(s)
        return self.c1 * self.power * a ** (self.power - 1) + self.log_coef / a


def _check_negative(s):
    if np.any(s >= 0):
        raise InvalidArgumentError("the large-gap expansion needs s < 0")


def A(s, k):
    """-c1(k) |s|^{4k+3} - ((2k+1)/8) log|s| for s < 0."""
    g = GapExpansion(k)
    s_arr = np.asarray(s, dtype=float)
    _check_negative(s_arr)
    a = np.abs(s_arr)
    out = -g.c1 * a ** g.power - g.log_coef * np.log(a)
    return float(out) if out.ndim == 0 else out


def default_s_deep(k, depth=40.0):
    """Point where the leading term of log F reaches -depth (rounded to the panel grid)."""
    g = GapExpansion(k)
    return -float((depth / g.c1) ** (1.0 / g.power))


@dataclass
class ChiEstimate:
    k: int
    value: float
    grid: np.ndarray
    chi_values: np.ndarray
    point_errors: np.ndarray
    err_components: dict
    converged: bool
    spread: float
    residual_slope: float = float("nan")
    info: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "k": self.k,
            "chi": self.value,
            "err_components": {k: float(v) for k, v in self.err_components.items()},
            "grid": [float(x) for x in self.grid],
            "chi_values": [float(x) for x in self.chi_values],
            "point_errors": [float(x) for x in self.point_errors],
            "spread": float(self.spread),
            "converged": bool(self.converged),
            "slope": float(self.residual_slope),
        }


def _panel_point(kernel, s, det_tol):
    try:
        r = distribution_F(kernel, s, det_tol, log_scale=True, deriv_tol=1e-12)
        derr = 0.0
    except UnresolvedError as err:
        r = err.best
        derr = np.inf if err.estimate is None else float(err.estimate)
    return r, max(derr, float(r.info.get("deriv_err", 0.0)))


def _panel_values(kernel, k, pts, det_tol):
    g = GapExpansion(k)
    res = bounded_map(lambda s: _panel_point(kernel, s, det_tol), pts)
    vals = np.array([r.log_deriv - g.deriv(s) for s, (r, _) in zip(pts, res)])
    derr = max(d for _, d in res)
    m_used = max(r.m for r, _ in res)
    return vals, derr, m_used


def _integrate_panel(kernel, k, a, b, degree, tol, det_tol, depth=0, max_depth=3):
    """int_a^b of (log-derivative - A') on one panel, refining by bisection."""
    x = cheb_points(degree + 1)
    pts = 0.5 * (b - a) * (x + 1) + a
    vals, derr, m_used = _panel_values(kernel, k, pts, det_tol)
    c = vals_to_coeffs(vals)
    fit_tail = tail_estimate(c)
    if fit_tail > tol and depth < max_depth:
        mid = 0.5 * (a + b)
        left = _integrate_panel(kernel, k, a, mid, degree, tol, det_tol, depth + 1, max_depth)
        right = _integrate_panel(kernel, k, mid, b, degree, tol, det_tol, depth + 1, max_depth)
        return (left[0] + right[0], max(left[1], right[1]), max(left[2], right[2]),
                max(left[3], right[3]))
    integral = float(integral_weights(degree + 1) @ vals) * 0.5 * (b - a)
    return integral, fit_tail * (b - a), derr * (b - a), m_used


def estimate_chi(kernel, k, M=-0.5, s_deep=None, tol=1e-6, det_tol=1e-13,
                 panel=PANEL_WIDTH, degree=PANEL_DEGREE, rh_tail=0.0):
    """Estimate chi_k from a solved kernel (see module docstring).

    Returns a :class:`ChiEstimate`; raises :class:`NoConvergenceError` when
    the deepest values do not plateau to within tol (the estimate is then in
    ``err.diagnostics["estimate"]``).
    """
    if s_deep is None:
        s_deep = default_s_deep(k)
    if not s_deep < M < 0:
        raise InvalidArgumentError("need s_deep < M < 0")
    npan = int(np.ceil((M - s_deep) / panel - 1e-9))
    edges = M - panel * np.arange(npan + 1)
    top = distribution_F(kernel, M, det_tol, log_scale=True)
    base = top.logF - A(M, k)
    cum = 0.0
    chis = [base]
    errs = [abs(top.err)]
    fit_tail = deriv_err = 0.0
    acc_err = abs(top.err)
    m_used = top.m
    for j in range(npan):
        hi, lo = edges[j], edges[j + 1]
        I, ft, de, mu = _integrate_panel(kernel, k, lo, hi, degree, tol, det_tol)
        cum += I
        fit_tail = max(fit_tail, ft)
        deriv_err = max(deriv_err, de)
        acc_err += ft + de
        m_used = max(m_used, mu)
        chis.append(base - cum)
        errs.append(acc_err)
        log.info("chi k=%d s=%.2f value=%.10f", k, lo, chis[-1])
    chis = np.array(chis)
    deep = chis[-PLATEAU_POINTS:]
    value = float(np.median(deep))
    spread = float(deep.max() - deep.min())
    comps = {
        "solver_tail": float(rh_tail),
        "det_cauchy": float(abs(top.err)),
        "deriv_tail": float(deriv_err),
        "fit_tail": float(fit_tail),
    }
    converged = all(v < tol for v in comps.values()) and spread < tol
    est = ChiEstimate(k, value, edges, chis, np.array(errs), comps, converged, spread,
                      info={"M": M, "s_deep": float(edges[-1]), "m_max": m_used})
    if spread >= tol:
        raise NoConvergenceError(
            f"chi_{k} estimates do not plateau: spread {spread:.2e} over the deepest "
            f"{PLATEAU_POINTS} grid values (tol {tol:.1e})",
            diagnostics={"estimate": est})
    return est


def fit_slope(x, y):
    """Least-squares slope and intercept of y against x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    P = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(P, y, rcond=None)
    return float(slope), float(icpt)


def residual_exponent(s_grid, logF, k, chi, floor=1e-13):
    """Slope of log|log F - A - chi| against log|s|."""
    s_grid = np.asarray(s_grid, dtype=float)
    r = np.abs(np.asarray(logF, dtype=float) - A(s_grid, k) - chi)
    if np.any(r < floor):
        warnings.warn("residuals at the numerical floor", FloorDominatedWarning)
    keep = r > 0
    return fit_slope(np.log(np.abs(s_grid[keep])), np.log(r[keep]))[0]


def tail_fit(s_grid, one_minus_F, floor=1e-300):
    """Exponent p in log(1 - F) ~ -c s^p from log(-log(1-F)) against log s.

    Returns (p, c).
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 1):
        raise InvalidArgumentError("tail fit needs s > 1")
    q = np.asarray(one_minus_F, dtype=float)
    if np.any(q <= floor) or np.any(q >= 1):
        warnings.warn("1 - F at the numerical floor", FloorDominatedWarning)
    keep = (q > floor) & (q < 1)
    p, icpt = fit_slope(np.log(s_grid[keep]), np.log(-np.log(q[keep])))
    return p, float(np.exp(icpt))


__all__ = ["GapExpansion", "A", "ChiEstimate", "estimate_chi", "residual_exponent", "tail_fit",
           "fit_slope", "CHI0_EXACT", "default_s_deep", "FloorDominatedWarning"]
