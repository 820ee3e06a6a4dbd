"""Heat-kernel quadrature: trapezoid, Gauss-Hermite and grid functions."""

from backend.quad.convergence import (
    ConvergenceTable,
    convergence_study,
    loglog_slope,
    reference_integral,
    spline_integrand,
)
from backend.quad.grid_function import GridFunction
from backend.quad.hermite import hermite_sigma, hermite_sigma_derivative
from backend.quad.kernels import heat_kernel
from backend.quad.schemes import (
    QuadratureScheme,
    admissible_epsilon,
    convolve,
    convolve_values,
    default_epsilon,
    gh_nodes,
    trapezoid_params,
)

__all__ = [
    "ConvergenceTable",
    "GridFunction",
    "QuadratureScheme",
    "admissible_epsilon",
    "convergence_study",
    "convolve",
    "convolve_values",
    "default_epsilon",
    "gh_nodes",
    "heat_kernel",
    "hermite_sigma",
    "hermite_sigma_derivative",
    "loglog_slope",
    "reference_integral",
    "spline_integrand",
    "trapezoid_params",
]
