"""Estimator-style front ends: fit solves the RH problem, predict evaluates F.

Nothing is learned from data here; ``fit`` builds and solves the problem
fixed by the constructor parameters, and the evaluation methods take grids
of s values.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .asymptotics import estimate_chi, tail_fit
from .cache import ResultCache
from .exceptions import InvalidArgumentError
from .fredholm import M_CAP, evaluate_grid
from .limitdist import F_inf, LimitKernel, ParametrixConfig
from .painleve import KernelEvaluator, ModelParams


def check_grid(X):
    """Validate s values given as (n,) or (n, 1) and return a flat float array."""
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise InvalidArgumentError("expected a single column of s values")
        X = X[:, 0]
    return X


def check_tol(tol, name="tol"):
    tol = float(tol)
    if not tol >= 1e-13:
        raise InvalidArgumentError(f"{name} must be >= 1e-13")
    return tol


class HigherOrderTW(TransformerMixin, BaseEstimator):
    """F_k(s; t) = det(I - K_s^(k)) with density and error estimate."""

    def __init__(self, k=0, t=None, rh_tol=1e-12, det_tol=1e-12, m_cap=M_CAP, cache_dir=None,
                 n_jobs=None):
        self.k = k
        self.t = t
        self.rh_tol = rh_tol
        self.det_tol = det_tol
        self.m_cap = m_cap
        self.cache_dir = cache_dir
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        check_tol(self.rh_tol, "rh_tol")
        check_tol(self.det_tol, "det_tol")
        params = ModelParams(self.k, () if self.t is None else tuple(self.t), tol=self.rh_tol)
        self.params_ = params
        self.kernel_ = KernelEvaluator.solve(params, cache=ResultCache(self.cache_dir))
        self.solver_tail_ = self.kernel_.solution.tail
        return self

    def results(self, X):
        check_is_fitted(self, "kernel_")
        return evaluate_grid(self.kernel_, check_grid(X), self.det_tol, self.m_cap, self.n_jobs)

    def predict(self, X):
        return np.array([r.F for r in self.results(X)])

    def density(self, X):
        return np.array([r.density for r in self.results(X)])

    def transform(self, X):
        """Columns (F, density, err_est)."""
        return np.array([[r.F, r.density, r.err] for r in self.results(X)])

    def chi(self, **kw):
        check_is_fitted(self, "kernel_")
        return estimate_chi(self.kernel_, self.params_.k, rh_tail=self.solver_tail_, **kw)

    def tail_exponent(self, X):
        r = self.transform(X)
        return tail_fit(check_grid(X), 1 - r[:, 0])


class LimitDistribution(TransformerMixin, BaseEstimator):
    """F_inf(s) = det(I - K^(inf)) on (s, 1)."""

    def __init__(self, r=0.25, rh_tol=1e-10, det_tol=1e-12, m_cap=M_CAP, cache_dir=None):
        self.r = r
        self.rh_tol = rh_tol
        self.det_tol = det_tol
        self.m_cap = m_cap
        self.cache_dir = cache_dir

    def fit(self, X=None, y=None):
        check_tol(self.rh_tol, "rh_tol")
        self.kernel_ = LimitKernel.solve(ParametrixConfig(self.r), self.rh_tol,
                                         cache=ResultCache(self.cache_dir))
        return self

    def results(self, X):
        check_is_fitted(self, "kernel_")
        return [F_inf(self.kernel_, s, self.det_tol, self.m_cap) for s in check_grid(X)]

    def predict(self, X):
        return np.array([r.F for r in self.results(X)])

    def transform(self, X):
        return np.array([[r.F, r.density, r.err] for r in self.results(X)])


__all__ = ["HigherOrderTW", "LimitDistribution", "check_grid", "check_tol"]
