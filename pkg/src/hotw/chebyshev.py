"""Chebyshev grids, value/coefficient transforms and series evaluation.

The grid used everywhere is the endpoint-including one

    -1, cos(pi (1 - 1/(n-1))), ..., cos(pi/(n-1)), 1

i.e. ``cos(pi j/(n-1))`` sorted ascending.  In approximation-theory language
these are the Chebyshev extreme (Lobatto, "second kind") points even though
RH literature sometimes calls the mapped version "points of the first kind".
Transforms are direct O(n^2) sums, which is plenty for n of a few hundred.

Coefficients may be scalars or 2x2 matrices: the leading axis is always the
degree index and any trailing axes are carried along.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidArgumentError


def cheb_points(n):
    """Return the n-point endpoint-including Chebyshev grid, ascending."""
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2 grid points, got {n}")
    j = np.arange(n - 1, -1, -1)
    x = np.cos(np.pi * j / (n - 1))
    # exact symmetry; cos() leaves ~1e-17 asymmetries otherwise
    x = 0.5 * (x - x[::-1])
    if n % 2 == 1:
        x[n // 2] = 0.0
    x[0], x[-1] = -1.0, 1.0
    return x


def cheb_T(j_max, x):
    """T_0..T_{j_max-1} at x (any shape, real or complex), stacked on axis -1."""
    x = np.asarray(x)
    out = np.empty(x.shape + (j_max,), dtype=np.result_type(x, float))
    out[..., 0] = 1.0
    if j_max > 1:
        out[..., 1] = x
    for j in range(2, j_max):
        out[..., j] = 2 * x * out[..., j - 1] - out[..., j - 2]
    return out


def _dct1_matrix(n):
    # T_j at the ascending grid: x_i = cos(pi (n-1-i)/(n-1))
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    return np.cos(np.pi * j * (n - 1 - i) / (n - 1))


@dataclass(frozen=True)
class ChebSeries:
    """A (possibly matrix-valued) Chebyshev series sum_j coeffs[j] T_j(x)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim == 0:
            c = c.reshape(1)
        if c.shape[0] < 1:
            raise InvalidArgumentError("a Chebyshev series needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self):
        return self.coeffs.shape[0]

    def __call__(self, x):
        return eval_series(self, x)


def vals_to_coeffs(values):
    """Interpolation coefficients from values at ``cheb_points(n)``."""
    v = np.asarray(values)
    n = v.shape[0]
    if n == 1:
        return ChebSeries(v.copy())
    T = _dct1_matrix(n)
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    scale = np.full(n, 2.0 / (n - 1))
    scale[0] /= 2
    scale[-1] /= 2
    flat = v.reshape(n, -1)
    c = scale[:, None] * (T.T @ (w[:, None] * flat))
    return ChebSeries(c.reshape(v.shape))


def coeffs_to_vals(series):
    """Values of the series at ``cheb_points(series.n)``."""
    c = series.coeffs
    n = c.shape[0]
    if n == 1:
        return c.copy()
    T = _dct1_matrix(n)
    return (T @ c.reshape(n, -1)).reshape(c.shape)


def clenshaw(c, x):
    """Clenshaw recurrence for sum_j c[j] T_j(x).

    ``c`` has the degree on axis 0 and optional trailing value axes; ``x`` can
    be any shape (complex allowed).  Result shape is x.shape + c.shape[1:].
    """
    c = np.asarray(c)
    x = np.asarray(x)
    tail = c.shape[1:]
    xe = x.reshape(x.shape + (1,) * len(tail))
    b1 = np.zeros(x.shape + tail, dtype=np.result_type(c, x))
    b2 = np.zeros_like(b1)
    for j in range(c.shape[0] - 1, 0, -1):
        b1, b2 = 2 * xe * b1 - b2 + c[j], b1
    return xe * b1 - b2 + c[0]


def eval_series(series, x):
    """Evaluate on [-1, 1]; use :func:`clenshaw` for off-interval points."""
    xa = np.asarray(x)
    if np.iscomplexobj(xa) or np.any(np.abs(xa) > 1 + 1e-14):
        raise InvalidArgumentError("eval_series is defined on the real interval [-1, 1]")
    return clenshaw(series.coeffs, xa)


def tail_estimate(series):
    """Largest entry magnitude among the trailing max(2, n/8) coefficients.

    This is the resolved/unresolved heuristic used throughout the package.
    """
    c = np.abs(np.asarray(series.coeffs))
    n = c.shape[0]
    if n < 4:
        raise InvalidArgumentError("tail_estimate needs at least 4 coefficients")
    k = max(2, n // 8)
    return float(c[-k:].max())


def diff_coeffs(c, scale=1.0):
    """Coefficients of the derivative of a Chebyshev series (axis 0)."""
    c = np.asarray(c)
    n = c.shape[0]
    if n == 1:
        return np.zeros_like(c)
    d = np.zeros((n + 1,) + c.shape[1:], dtype=c.dtype)
    for j in range(n - 1, 0, -1):
        d[j - 1] = d[j + 1] + 2 * j * c[j]
    d[0] /= 2
    return d[: n - 1] * scale


def integral_weights(n):
    """Clenshaw-Curtis weights for the endpoint-including n-point grid."""
    # integral of T_j over [-1, 1]: 2/(1-j^2) for even j, 0 for odd
    mom = np.zeros(n)
    je = np.arange(0, n, 2)
    mom[je] = 2.0 / (1.0 - je**2)
    # coefficient map: c = S T^T W v
    T = _dct1_matrix(n)
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    scale = np.full(n, 2.0 / (n - 1))
    scale[0] /= 2
    scale[-1] /= 2
    return w * (T @ (scale * mom))
