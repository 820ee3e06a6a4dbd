"""
Scheme Benchmark
Iteration counts, wall time and fixed-point error per (scheme, tolerance).
"""

from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from scipy.stats import linregress, norm

from backend.bass.fixed_point import BassInterval, FixedPointOptions
from backend.bass.model import calibrate
from backend.density.marginal import MarginalDistribution
from backend.quad.schemes import QuadratureScheme

logger = structlog.get_logger()

ExactCdf = Callable[[float, np.ndarray], np.ndarray]

BENCHMARK_COLUMNS = ["scheme", "n", "tol", "interval", "iterations", "wall_time", "err_itr", "fixed_point_error"]


def gaussian_fixed_point(t_start: float, w: np.ndarray) -> np.ndarray:
    """Φ(w/√T_i), the fixed point for lognormal marginals."""
    return norm.cdf(np.asarray(w, dtype=float) / np.sqrt(t_start))


def fixed_point_distance(interval: BassInterval, exact: ExactCdf, band: float = 3.0) -> float:
    """Sup-norm distance to an exact F_W on |w| ≤ band·√T_i."""
    grid = interval.F_W.grid
    inside = grid[np.abs(grid) <= band * np.sqrt(interval.t_start)]
    return float(np.max(np.abs(interval.F_W(inside) - exact(interval.t_start, inside))))


def benchmark_schemes(
    marginals: Sequence[MarginalDistribution],
    maturities: Sequence[float],
    tols: Iterable[float],
    schemes: Iterable[QuadratureScheme],
    max_iter: int = 500,
    options: Optional[FixedPointOptions] = None,
    exact: Optional[ExactCdf] = None,
) -> pd.DataFrame:
    """
    Calibrate once per (scheme, tol) and tabulate every interval.

    Intervals run on a single worker so wall times compare across schemes.
    fixed_point_error is NaN when no exact fixed point is given.
    """
    tol_list = list(tols)
    rows = []
    for scheme in schemes:
        for tol in tol_list:
            model = calibrate(marginals, maturities, scheme, tol, max_iter, options, workers=1)
            for interval in model.intervals:
                rows.append(
                    {
                        "scheme": scheme.kind,
                        "n": scheme.n,
                        "tol": tol,
                        "interval": interval.index,
                        "iterations": interval.iterations,
                        "wall_time": interval.wall_time,
                        "err_itr": interval.final_error,
                        "fixed_point_error": fixed_point_distance(interval, exact) if exact else np.nan,
                    }
                )
            logger.info("Benchmark row", scheme=scheme.kind, n=scheme.n, tol=tol, iterations=model.total_iterations)
    return pd.DataFrame(rows, columns=BENCHMARK_COLUMNS)


def iteration_fit(frame: pd.DataFrame) -> pd.DataFrame:
    """Least-squares line of iterations against −log₁₀ tol per (scheme, interval)."""
    rows = []
    for (scheme, interval), group in frame.groupby(["scheme", "interval"], sort=True):
        x = -np.log10(group["tol"].to_numpy(dtype=float))
        y = group["iterations"].to_numpy(dtype=float)
        if np.unique(x).size < 2:
            continue
        fit = linregress(x, y)
        r2 = fit.rvalue**2 if np.ptp(y) > 0 else 1.0
        rows.append({"scheme": scheme, "interval": interval, "slope": fit.slope, "intercept": fit.intercept, "r2": r2})
    return pd.DataFrame(rows, columns=["scheme", "interval", "slope", "intercept", "r2"])
