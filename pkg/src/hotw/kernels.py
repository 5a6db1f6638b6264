"""Integrable kernels (f1(u) f2(v) - f1(v) f2(u)) / (-2 pi i (u - v)) on the real line."""
import logging

import numpy as np
from numpy.polynomial import chebyshev as npc

from .exceptions import InvalidArgumentError

log = logging.getLogger(__name__)

TWO_PI_I = 2j * np.pi
_GL_TAU, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_TAU, _GL_W = 0.5 * (_GL_TAU + 1), 0.5 * _GL_W


class IntegrableKernel:
    """Kernel built from a column f = (f1, f2).

    Subclasses provide ``_column_raw(u, deriv)`` and ``special_points()``:
    real points where the raw evaluation is unavailable (contour endpoints)
    although f itself is analytic there.
    """

    near_scale = 1e-4

    def _column_raw(self, u, deriv):
        raise NotImplementedError

    def special_points(self):
        return ()

    def column(self, u, deriv=False):
        """f(u) stacked on the last axis; with deriv also f'(u)."""
        u = np.asarray(u, dtype=float)
        shape = u.shape
        u = u.ravel()
        if not np.all(np.isfinite(u)):
            raise InvalidArgumentError("u must be finite")
        pts = np.asarray(self.special_points(), dtype=float)
        sp = np.zeros(u.shape, bool)
        if pts.size:
            sp = np.any(np.abs(u[:, None] - pts[None, :]) < 1e-6, axis=-1)
        f = np.zeros(u.shape + (2,), dtype=complex)
        df = np.zeros_like(f) if deriv else None
        if np.any(~sp):
            r = self._column_raw(u[~sp], deriv)
            if deriv:
                f[~sp], df[~sp] = r
            else:
                f[~sp] = r
        for i in np.nonzero(sp)[0]:
            r = self._near_point(u[i], deriv)
            if deriv:
                f[i], df[i] = r
            else:
                f[i] = r
        f = f.reshape(shape + (2,))
        if deriv:
            return f, df.reshape(shape + (2,))
        return f

    def _near_point(self, x, deriv, h=1e-2, m=24):
        # f is analytic at x: interpolate from nearby first-kind Chebyshev nodes
        t = np.cos(np.pi * (np.arange(m) + 0.5) / m)
        r = self._column_raw(x + h * t, deriv)
        f = r[0] if deriv else r
        cf = npc.chebfit(t, f, m - 1)
        val = npc.chebval(0.0, cf)
        if not deriv:
            return val
        return val, npc.chebval(0.0, npc.chebder(cf)) / h

    def diagonal(self, u):
        f, df = self.column(np.atleast_1d(np.asarray(u, dtype=float)), deriv=True)
        return ((df[..., 0] * f[..., 1] - df[..., 1] * f[..., 0]) / (-TWO_PI_I)).real

    def _near_diagonal(self, u, v, fv):
        # f(u) = f(v) + (u - v) g with g the mean of f' over [v, u], so the
        # numerator is (u - v)(g1 f2(v) - f1(v) g2) without cancellation
        pts = v[:, None] + _GL_TAU[None, :] * (u - v)[:, None]
        _, df = self.column(pts, deriv=True)
        g = np.einsum("pqc,q->pc", df, _GL_W)
        return (g[:, 0] * fv[:, 1] - fv[:, 0] * g[:, 1]) / (-TWO_PI_I)

    def _pairs(self, u, v, fu, fv):
        d = u - v
        num = fu[..., 0] * fv[..., 1] - fv[..., 0] * fu[..., 1]
        near = np.abs(d) < self.near_scale * (1 + np.abs(u))
        with np.errstate(divide="ignore", invalid="ignore"):
            K = num / (-TWO_PI_I * d)
        if np.any(near):
            idx = np.nonzero(near)
            K[idx] = self._near_diagonal(u[idx], v[idx], fv[idx])
        im = np.max(np.abs(K.imag)) if K.size else 0.0
        if im > 1e-8 * max(1.0, np.abs(K.real).max()):
            log.warning("kernel has imaginary part %.2e", im)
        return K.real

    def matrix(self, x, y=None):
        """K(x_i, y_j) for real node vectors (y defaults to x)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        same = y is None
        y = x if same else np.atleast_1d(np.asarray(y, dtype=float))
        fx = self.column(x)
        fy = fx if same else self.column(y)
        X, Y = np.meshgrid(x, y, indexing="ij")
        FX = np.broadcast_to(fx[:, None, :], X.shape + (2,))
        FY = np.broadcast_to(fy[None, :, :], X.shape + (2,))
        return self._pairs(X, Y, FX, FY)

    def __call__(self, u, v):
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        K = self._pairs(u.ravel(), v.ravel(), self.column(u.ravel()), self.column(v.ravel()))
        return K.reshape(u.shape) if u.shape else float(K[0])
