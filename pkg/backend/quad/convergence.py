"""
Quadrature Convergence Study
Error of each scheme against a fine composite reference, with log-log slopes.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog
from scipy.integrate import trapezoid

from backend.quad.kernels import heat_kernel
from backend.quad.schemes import QuadratureScheme

logger = structlog.get_logger()

REFERENCE_POINTS = 1_000_000
REFERENCE_WIDTH = 12.0
# below this the outer GH nodes barely reach the outer knots; tabulated but left out of the slope
SLOPE_MIN_N = 17

# knots and weights of the default spline family; no knot at the origin
SPLINE_KNOTS = tuple(np.linspace(-2.3, 2.45, 24) + 0.0137)
SPLINE_COEFFS = tuple(np.random.default_rng(2024).uniform(-1.0, 1.0, 24))


def spline_integrand(
    m: int,
    knots: Sequence[float] = SPLINE_KNOTS,
    coefficients: Sequence[float] = SPLINE_COEFFS,
) -> Callable[[np.ndarray], np.ndarray]:
    """
    Σ c_j (x − k_j)₊^m: a degree-m spline whose m-th derivative jumps at
    each knot, so it has exactly m weak derivatives in L²(ρ).
    """
    knots_arr = np.asarray(knots, dtype=float)
    coeffs_arr = np.asarray(coefficients, dtype=float)

    def f(x):
        x = np.asarray(x, dtype=float)
        return (np.maximum(x[..., None] - knots_arr, 0.0) ** m) @ coeffs_arr

    return f


def reference_integral(f: Callable, variance: float, points: int = REFERENCE_POINTS) -> float:
    """∫ f K_variance by composite trapezoid on [−12σ, 12σ]."""
    sigma = np.sqrt(variance)
    x = np.linspace(-REFERENCE_WIDTH * sigma, REFERENCE_WIDTH * sigma, points + 1)
    return float(trapezoid(f(x) * heat_kernel(x, variance), x))


def loglog_slope(n_values: Sequence[int], errors: Sequence[float]) -> float:
    n_arr = np.asarray(n_values, dtype=float)
    err_arr = np.maximum(np.asarray(errors, dtype=float), 1e-300)
    return float(np.polyfit(np.log(n_arr), np.log(err_arr), 1)[0])


@dataclass(frozen=True)
class ConvergenceTable:
    """Absolute errors per (scheme, n) and the fitted slope per scheme."""

    errors: Dict[str, Tuple[Tuple[int, float], ...]]
    slopes: Dict[str, float]
    reference: float

    def error(self, kind: str, n: int) -> float:
        return dict(self.errors[kind])[n]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"scheme": kind, "n": n, "abs_error": err, "slope": self.slopes[kind]}
            for kind, entries in self.errors.items()
            for n, err in entries
        ]
        return pd.DataFrame(rows, columns=["scheme", "n", "abs_error", "slope"])


def convergence_study(
    m: int,
    n_list: Iterable[int],
    kinds: Iterable[str] = ("trapezoid", "gauss_hermite"),
    variance: float = 1.0,
    integrand: Optional[Callable] = None,
    reference: Optional[float] = None,
    slope_min_n: int = SLOPE_MIN_N,
) -> ConvergenceTable:
    """
    Tabulate |Σ w f(x) − ∫ f K| for each scheme and n.

    Args:
        m: Smoothness order of the family (and of the trapezoid parameters)
        n_list: Point counts
        kinds: Scheme kinds to compare
        variance: Kernel variance
        integrand: Vectorized f; defaults to spline_integrand(m)
        reference: Known integral; defaults to the fine composite rule
        slope_min_n: Smallest n entering the slope fit (all n when fewer
            than two qualify)

    Returns:
        ConvergenceTable with log-log slopes per scheme
    """
    f = integrand if integrand is not None else spline_integrand(m)
    truth = reference if reference is not None else reference_integral(f, variance)
    n_values = list(n_list)

    errors: Dict[str, Tuple[Tuple[int, float], ...]] = {}
    slopes: Dict[str, float] = {}
    for kind in kinds:
        entries = []
        for n in n_values:
            nodes, weights = QuadratureScheme(kind=kind, n=n, m=m).rule(variance)
            entries.append((n, abs(float(f(nodes) @ weights) - truth)))
        errors[kind] = tuple(entries)
        fitted = [(n, e) for n, e in entries if n >= slope_min_n]
        fitted = fitted if len(fitted) >= 2 else entries
        slopes[kind] = loglog_slope([n for n, _ in fitted], [e for _, e in fitted])
        logger.info("Convergence measured", scheme=kind, m=m, slope=slopes[kind])

    return ConvergenceTable(errors=errors, slopes=slopes, reference=truth)
