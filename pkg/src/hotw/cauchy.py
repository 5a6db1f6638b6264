"""Cauchy transforms of (mapped) Chebyshev polynomials.

For the unit interval write

    c_j(z) = int_{-1}^{1} T_j(t) / (t - z) dt,      C[T_j](z) = c_j(z) / (2 pi i).

Two elementary routes are used:

* near the interval, the forward recurrence
  c_{j+1} = 2 mu_j + 2 z c_j - c_{j-1}, seeded with c_0 = log((z-1)/(z+1)),
  c_1 = 2 + z c_0 (mu_j = int T_j).  It is neutrally stable on the interval
  and grows errors like rho^j off it, rho = |z + sqrt(z-1) sqrt(z+1)|;
* away from it, the inverse-Joukowski expansion
  1/(z - t) = (2/s) sum' w^k T_k(t), s = sqrt(z-1) sqrt(z+1), w = z - s,
  giving c_j = -(1/s) sum' w^k (mu_{j+k} + mu_{|j-k|}), which converges
  like |w|^k.

Both have their branch cut exactly on [-1, 1].
"""
from functools import lru_cache

import numpy as np

from .chebyshev import cheb_T, cheb_points
from .exceptions import ContourTopologyError, EndpointSingularError, InvalidArgumentError

PLUS, MINUS, OFF = "plus", "minus", None
TWO_PI_I = 2j * np.pi

# forward recurrence is used while rho**n stays below this
_RECURRENCE_GROWTH = 100.0
_ON_TOL = 1e-13


def _side_sign(side):
    if side in (PLUS, "+", 1):
        return 1
    if side in (MINUS, "-", -1):
        return -1
    if side in (OFF, 0, "off"):
        return 0
    raise InvalidArgumentError(f"unknown side tag {side!r}")


def _moments(n):
    mu = np.zeros(n)
    je = np.arange(0, n, 2)
    mu[je] = 2.0 / (1.0 - je**2)
    return mu


@lru_cache(maxsize=64)
def _joukowski_table(n, K):
    mu = _moments(n + K + 1)
    j = np.arange(n)[:, None]
    k = np.arange(K)[None, :]
    a = mu[j + k] + mu[np.abs(j - k)]
    a[:, 0] *= 0.5
    return a


def _sqrt_pair(z):
    s = np.sqrt(z - 1) * np.sqrt(z + 1)
    # signed zeros can put the two roots on different sheets for real z < -1
    flip = np.abs(z + s) < np.abs(z - s)
    return np.where(flip, -s, s)


def joukowski_inverse(z):
    """w = z - sqrt(z-1) sqrt(z+1); |w| < 1 off [-1, 1]."""
    z = np.asarray(z, dtype=complex)
    return z - _sqrt_pair(z)


def _recurrence(n, z, sign, deriv):
    """Forward recurrence; sign selects the boundary value for points on (-1, 1)."""
    P = z.shape[0]
    c = np.empty((P, n), dtype=complex)
    r = (z - 1) / (z + 1)
    c0 = np.log(r)
    if sign:
        on = (z.imag == 0) & (np.abs(z.real) < 1)
        if np.any(on):
            x = z.real[on]
            c0[on] = np.log(np.abs((x - 1) / (x + 1))) + sign * 1j * np.pi
    c[:, 0] = c0
    mu = _moments(n)
    if n > 1:
        c[:, 1] = 2 + z * c0
    for j in range(1, n - 1):
        c[:, j + 1] = 2 * mu[j] + 2 * z * c[:, j] - c[:, j - 1]
    if not deriv:
        return c
    d = np.empty_like(c)
    d[:, 0] = 1 / (z - 1) - 1 / (z + 1)
    if n > 1:
        d[:, 1] = c0 + z * d[:, 0]
    for j in range(1, n - 1):
        d[:, j + 1] = 2 * c[:, j] + 2 * z * d[:, j] - d[:, j - 1]
    return c, d


def _joukowski(n, z, deriv):
    s = _sqrt_pair(z)
    w = z - s
    aw = np.maximum(np.abs(w), 1e-300)
    K_each = np.ceil(40.0 / np.maximum(-np.log(aw), 1e-3)).astype(int) + 2
    c = np.empty((z.shape[0], n), dtype=complex)
    d = np.empty_like(c) if deriv else None
    # bin by term count so a few slow points do not set K for everyone
    bins = np.ceil(np.log2(K_each)).astype(int)
    for b in np.unique(bins):
        sel = bins == b
        K = int(2**b)
        a = _joukowski_table(n, K)
        ws = w[sel][:, None] ** np.arange(K)[None, :]
        ss = s[sel][:, None]
        c[sel] = -(ws @ a.T) / ss
        if deriv:
            kk = np.arange(K)[None, :]
            zz = z[sel][:, None]
            d[sel] = ((ws * (kk / ss**2 + zz / ss**3)) @ a.T)
    return (c, d) if deriv else c


def stieltjes_T(n, z, side=OFF, deriv=False):
    """c_j(z) for j < n at the points z (array); shape z.shape + (n,).

    Points on (-1, 1) need ``side`` (plus = from above, minus = from below);
    points at +-1 raise :class:`EndpointSingularError`.  With ``deriv`` the
    pair (c, dc/dz) is returned; on (-1, 1) this is the derivative of the
    chosen boundary value.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    sign = _side_sign(side)
    on = (np.abs(zf.imag) <= _ON_TOL) & (np.abs(zf.real) <= 1)
    if np.any(on):
        if np.any(np.abs(np.abs(zf.real[on]) - 1) <= _ON_TOL):
            raise EndpointSingularError("Cauchy transform requested at an interval endpoint")
        if sign == 0:
            raise InvalidArgumentError("point lies on (-1, 1): a side (plus/minus) is required")
        zf = zf.copy()
        zf[on] = zf.real[on]
    elif sign != 0:
        raise InvalidArgumentError("side=plus/minus requested for a point off (-1, 1)")
    rho = np.abs(zf + _sqrt_pair(zf))
    near = (n * np.log(np.maximum(rho, 1.0)) <= np.log(_RECURRENCE_GROWTH)) | on
    c = np.empty((zf.shape[0], n), dtype=complex)
    d = np.empty_like(c) if deriv else None
    if np.any(near):
        r = _recurrence(n, zf[near], sign, deriv)
        if deriv:
            c[near], d[near] = r
        else:
            c[near] = r
    far = ~near
    if np.any(far):
        r = _joukowski(n, zf[far], deriv)
        if deriv:
            c[far], d[far] = r
        else:
            c[far] = r
    if deriv:
        return c.reshape(shape + (n,)), d.reshape(shape + (n,))
    return c.reshape(shape + (n,))


def cauchy_T(j, z, side=OFF):
    """(1/2 pi i) int_{-1}^{1} T_j(t)/(t - z) dt  at a single point z."""
    if j < 0:
        raise InvalidArgumentError("degree must be >= 0")
    return complex(stieltjes_T(j + 1, np.array([z]), side)[0, j] / TWO_PI_I)


def endpoint_finite_part(n, p):
    """FP_j(p) = lim_{z->p} [c_j(z) - p T_j(p) log(p (z - p))] for j < n, p = +-1."""
    mu = _moments(n)
    q = np.zeros(n)
    if n > 1:
        q[1] = 2.0
    for j in range(1, n - 1):
        q[j + 1] = 2 * mu[j] + 2 * p * q[j] - q[j - 1]
    Tp = float(p) ** np.arange(n)
    return -p * np.log(2.0) * Tp + q


def _infinity_correction(comp, n):
    zi = comp.chart.image_of_infinity
    if zi is None:
        return np.zeros(n, dtype=complex)
    return stieltjes_T(n, np.array([zi]))[0]


def component_basis(comp, zeta, n=None, side=OFF, deriv=False):
    """Rows of (2 pi i) C_{Gamma_i}[T_j o M_i](zeta), j < n, for points zeta.

    ``side`` only applies to points lying on this component.
    """
    n = comp.degree if n is None else n
    zeta = np.asarray(zeta, dtype=complex)
    ch = comp.chart
    num = ch.a * zeta + ch.b
    den = ch.c * zeta + ch.d
    pole = np.abs(den) <= 1e-15 * np.abs(num)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(pole, 0.0, num / np.where(pole, 1.0, den))
    on = (np.abs(z.imag) <= _ON_TOL) & (np.abs(z.real) < 1) & ~pole
    corr = _infinity_correction(comp, n)
    out = np.empty(z.shape + (n,), dtype=complex)
    dout = np.empty_like(out) if deriv else None
    if np.any(pole):
        # c_j vanishes at infinity; c_j(M) M' tends to mu_j (ad - bc) / (a zeta + b)^2
        out[pole] = 0.0
        if deriv:
            dout[pole] = _moments(n)[None, :] * ((ch.a * ch.d - ch.b * ch.c) / num[pole] ** 2)[:, None]
    fin = ~on & ~pole
    if np.any(on):
        if _side_sign(side) == 0:
            raise InvalidArgumentError(f"point on component {comp.name!r} needs a side")
        r = stieltjes_T(n, z[on].real.astype(complex), side, deriv)
        if deriv:
            out[on], dout[on] = r
        else:
            out[on] = r
    if np.any(fin):
        r = stieltjes_T(n, z[fin], deriv=deriv)
        if deriv:
            out[fin], dout[fin] = r
            dout[fin] *= ch.deriv(zeta[fin])[..., None]
        else:
            out[fin] = r
    if deriv:
        if np.any(on):
            dout[on] *= ch.deriv(zeta[on])[..., None]
        return out - corr, dout
    return out - corr


def cauchy_component(comp, series, zeta, side=OFF):
    """C_{Gamma_i}[sum_j U_j T_j o M_i](zeta) for matrix coefficients U (n, 2, 2)."""
    U = np.asarray(series.coeffs)
    B = component_basis(comp, zeta, U.shape[0], side) / TWO_PI_I
    return np.tensordot(B, U, axes=([-1], [0]))


def cauchy_component_deriv(comp, series, zeta, side=OFF):
    U = np.asarray(series.coeffs)
    _, D = component_basis(comp, zeta, U.shape[0], side, deriv=True)
    return np.tensordot(D / TWO_PI_I, U, axes=([-1], [0]))


def _junction_row(problem, A, pA, degrees):
    """Regularized minus-limit of C U at the endpoint pA of component A.

    The log singularities of the incident components cancel when U obeys the
    zero-sum condition; what is left is assembled analytically here.
    Returns (2 pi i) * row, split per component.
    """
    comps = problem.components
    compA = comps[A]
    zstar = compA.endpoint(pA)
    label = compA.label(pA)
    incident = problem.incident(label) if label is not None else [(A, pA)]
    inc_idx = {i for i, _ in incident}
    if len(inc_idx) != len(incident):
        raise ContourTopologyError("a component meets the same junction twice")
    dA = complex(compA.chart.deriv(zstar))
    rows = []
    for i, comp in enumerate(comps):
        n = degrees[i]
        if i not in inc_idx:
            rows.append(component_basis(comp, np.array([zstar]), n)[0])
            continue
        p = dict(incident)[i]
        # log|x - pA| is common to every incident term and cancels under zero sum
        if i == A:
            ell = -1j * np.pi * p
        else:
            di = complex(comp.chart.deriv(comp.endpoint(p)))
            ell = np.log(-p * pA * di / dA)
        Tp = float(p) ** np.arange(n)
        row = endpoint_finite_part(n, p) + p * Tp * ell - _infinity_correction(comp, n)
        rows.append(row)
    return rows


def collocation_layout(problem, degrees):
    """Offsets of each component's block in the stacked coefficient vector."""
    offs = np.concatenate([[0], np.cumsum(degrees)])
    return offs


def cauchy_matrix_minus(problem, degrees=None):
    """Scalar collocation matrices (C, E) for the stacked Chebyshev coefficients.

    Row r corresponds to collocation point r (components in order, points
    along each component).  ``C @ u`` gives (C^- u)(x_r) -- with the
    regularized finite limit at endpoints -- and ``E @ u`` gives the series of
    the owning component evaluated at x_r.
    """
    comps = problem.components
    if degrees is None:
        degrees = [c.degree for c in comps]
    degrees = [int(n) for n in degrees]
    if min(degrees) < 2:
        raise InvalidArgumentError("each component needs at least 2 coefficients")
    offs = collocation_layout(problem, degrees)
    N = int(offs[-1])
    C = np.zeros((N, N), dtype=complex)
    E = np.zeros((N, N))
    for A, compA in enumerate(comps):
        nA = degrees[A]
        x = cheb_points(nA)
        zeta = compA.inverse_chart(x)
        rA = slice(offs[A], offs[A + 1])
        E[rA, rA] = cheb_T(nA, x)
        inner = slice(1, nA - 1)
        for i, comp in enumerate(comps):
            cols = slice(offs[i], offs[i + 1])
            if i == A:
                block = component_basis(comp, zeta[inner], degrees[i], side=MINUS)
            else:
                block = component_basis(comp, zeta[inner], degrees[i])
            C[offs[A] + 1: offs[A + 1] - 1, cols] = block
        for p, r in ((-1, offs[A]), (1, offs[A + 1] - 1)):
            for i, row in enumerate(_junction_row(problem, A, p, degrees)):
                C[r, offs[i]: offs[i + 1]] = row
    return C / TWO_PI_I, E


def zero_sum_rows(problem, degrees):
    """One row per junction (and per free endpoint): sum_i p_i U^i(p_i)."""
    offs = collocation_layout(problem, degrees)
    N = int(offs[-1])
    rows, labels = [], []
    seen = set()
    for A, comp in enumerate(problem.components):
        for p in (-1, 1):
            lab = comp.label(p)
            key = lab if lab is not None else (A, p)
            if key in seen:
                continue
            seen.add(key)
            inc = problem.incident(lab) if lab is not None else [(A, p)]
            row = np.zeros(N)
            for i, q in inc:
                row[offs[i]: offs[i + 1]] = float(q) ** (np.arange(degrees[i]) + 1)
            rows.append(row)
            labels.append((key, inc))
    return np.array(rows), labels


__all__ = [
    "PLUS", "MINUS", "OFF", "stieltjes_T", "cauchy_T", "cauchy_component",
    "cauchy_component_deriv", "cauchy_matrix_minus", "component_basis",
    "endpoint_finite_part", "joukowski_inverse", "zero_sum_rows", "cheb_points",
]
