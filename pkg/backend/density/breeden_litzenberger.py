"""
Breeden-Litzenberger Baseline
Density as e^{rτ}∂²C/∂K² by central differences on a spline of call prices.
Kept as a comparison baseline for the LQR estimator.
"""

from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
import structlog
from scipy.interpolate import CubicSpline

from backend.density.lqr import LqrFit
from backend.utils.exceptions import InvalidInput, TooFewStrikes

logger = structlog.get_logger()


@dataclass(frozen=True)
class SampledDensity:
    strikes: np.ndarray
    density: np.ndarray


def bl_density(
    call_prices: Sequence[Tuple[float, float]],
    r: float,
    tau: float,
    eval_grid: np.ndarray = None,
) -> SampledDensity:
    """
    Args:
        call_prices: (K, C) pairs with ascending strikes
        r: Rate
        tau: Maturity
        eval_grid: Strikes to report at (default: the interior quote strikes)

    Raises:
        TooFewStrikes: fewer than 3 strikes
        InvalidInput: strikes not strictly ascending
    """
    data = np.asarray(call_prices, dtype=float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise TooFewStrikes(f"need at least 3 strikes, got {0 if data.ndim != 2 else data.shape[0]}")
    strikes, prices = data[:, 0], data[:, 1]
    if np.any(np.diff(strikes) <= 0):
        raise InvalidInput("strikes must be strictly ascending")

    spline = CubicSpline(strikes, prices, bc_type="natural")
    if eval_grid is None:
        eval_grid = strikes[1:-1]
    grid = np.asarray(eval_grid, dtype=float)
    if np.any(grid <= strikes[0]) or np.any(grid >= strikes[-1]):
        raise InvalidInput("evaluation strikes must lie strictly inside the quoted range")
    step = 0.5 * float(np.min(np.diff(strikes)))
    low = np.maximum(grid - step, strikes[0])
    high = np.minimum(grid + step, strikes[-1])
    # second difference with possibly asymmetric steps at the ends
    h_low, h_high = grid - low, high - grid
    second = 2.0 * (
        h_low * spline(high) - (h_low + h_high) * spline(grid) + h_high * spline(low)
    ) / (h_low * h_high * (h_low + h_high))
    density = np.exp(r * tau) * second
    return SampledDensity(strikes=grid, density=density)


@dataclass(frozen=True)
class DensityComparison:
    strikes: np.ndarray
    lqr_error: np.ndarray
    bl_error: np.ndarray

    @property
    def lqr_max_error(self) -> float:
        return float(np.max(np.abs(self.lqr_error)))

    @property
    def bl_max_error(self) -> float:
        return float(np.max(np.abs(self.bl_error)))

    def to_dict(self) -> dict:
        return {"lqr_max_error": self.lqr_max_error, "bl_max_error": self.bl_max_error, "points": int(self.strikes.size)}


def compare_with_lqr(
    fit: LqrFit,
    call_prices: Sequence[Tuple[float, float]],
    r: float,
    tau: float,
    true_density: Callable[[np.ndarray], np.ndarray],
    eval_grid: np.ndarray = None,
) -> DensityComparison:
    """Errors of both estimators against `true_density` on a common grid."""
    strikes = np.asarray(call_prices, dtype=float)[:, 0]
    if eval_grid is None:
        eval_grid = strikes[1:-1]
    grid = np.asarray(eval_grid, dtype=float)
    truth = np.asarray(true_density(grid), dtype=float)
    baseline = bl_density(call_prices, r, tau, grid)
    estimate = np.asarray(fit.density_at(grid), dtype=float)
    comparison = DensityComparison(strikes=grid, lqr_error=estimate - truth, bl_error=baseline.density - truth)
    logger.info("Density estimators compared", tau=tau, **comparison.to_dict())
    return comparison
