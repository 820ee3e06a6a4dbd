"""
Fixed-Point Operator
𝒜F = F_{μ_i} ∘ (K_Δ ⋆ (F⁻¹_{μ_{i+1}} ∘ (K_Δ ⋆ F))) on a uniform w-grid.
"""

import numpy as np
import structlog

from backend.density.marginal import MarginalDistribution
from backend.quad.grid_function import GridFunction
from backend.quad.schemes import QuadratureScheme, convolve
from backend.utils.exceptions import InvalidInput, QuantileOverflow

logger = structlog.get_logger()

OVERFLOW_SLACK = 1e-9


def w_grid(t_end: float, points: int = 801, width: float = 8.0) -> np.ndarray:
    """Uniform grid on [−width·√t_end, width·√t_end]."""
    if t_end <= 0:
        raise InvalidInput(f"t_end must be positive, got {t_end}")
    half = width * np.sqrt(t_end)
    return np.linspace(-half, half, points)


def inner_map(
    F: GridFunction,
    mu_next: MarginalDistribution,
    dt: float,
    scheme: QuadratureScheme,
    clamp: float = 1e-12,
) -> GridFunction:
    """
    F⁻¹_{μ_{i+1}} ∘ (K_Δ ⋆ F) as a monotone map on F's grid.

    Raises:
        QuantileOverflow: the convolved CDF leaves [0, 1] beyond rounding
    """
    smoothed = convolve(F, dt, F.grid, scheme).values
    if not np.all(np.isfinite(smoothed)):
        raise QuantileOverflow("convolved CDF is not finite; widen the w-grid")
    if smoothed.min() < -OVERFLOW_SLACK or smoothed.max() > 1.0 + OVERFLOW_SLACK:
        raise QuantileOverflow(
            f"convolved CDF spans [{smoothed.min():.3e}, {smoothed.max():.3e}] outside [0, 1]"
        )
    levels = np.clip(smoothed, clamp, 1.0 - clamp)
    spots = np.maximum.accumulate(np.asarray(mu_next.quantile(levels), dtype=float))
    return GridFunction(F.grid, spots, kind="map")


def apply_A(
    F: GridFunction,
    mu_i: MarginalDistribution,
    mu_next: MarginalDistribution,
    dt: float,
    scheme: QuadratureScheme,
    clamp: float = 1e-12,
) -> GridFunction:
    """
    One application of the Bass operator.

    Args:
        F: Current CDF of W_{T_i} on the w-grid
        mu_i: Marginal at T_i
        mu_next: Marginal at T_{i+1}
        dt: T_{i+1} − T_i (variance of both kernels)
        scheme: Convolution rule
        clamp: Inner CDF values are clamped to [clamp, 1 − clamp]

    Returns:
        Non-decreasing CDF grid function with values in [0, 1] on F's grid
    """
    if dt <= 0:
        raise InvalidInput(f"dt must be positive, got {dt}")
    G = inner_map(F, mu_next, dt, scheme, clamp)
    spots = convolve(G, dt, F.grid, scheme).values
    values = np.clip(np.maximum.accumulate(np.asarray(mu_i.cdf(spots), dtype=float)), 0.0, 1.0)
    return GridFunction(F.grid, values, kind="cdf")
