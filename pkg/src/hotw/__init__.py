"""Higher-order Tracy-Widom distributions from numerically solved Riemann-Hilbert problems."""
from .asymptotics import CHI0_EXACT, A, GapExpansion, estimate_chi, residual_exponent, tail_fit
from .cache import ResultCache
from .chebyshev import ChebSeries, cheb_points, coeffs_to_vals, tail_estimate, vals_to_coeffs
from .contour import CanonicalRHProblem, ContourComponent, MoebiusMap
from .estimators import HigherOrderTW, LimitDistribution
from .exceptions import (ConsistencyError, ContourTopologyError, EndpointSingularError, HOTWError,
                         InvalidArgumentError, NoConvergenceError, NoSolutionError,
                         SingularOperatorError, UnresolvedError)
from .fredholm import DetResult, distribution_F, fredholm_det, gauss_legendre, one_minus_F
from .limitdist import F_inf, LimitKernel, ParametrixConfig, build_Y_problem
from .painleve import KernelEvaluator, ModelParams, build_psi_problem, kernel_K
from .rhsolver import SpectralSolution, adaptive_solve, evaluate_psi, solve_rh

__version__ = "0.1.0"
